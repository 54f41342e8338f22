#pragma once

// Variety tangent spaces, tube tangency classification, random variety
// translates with dyadic pigeonholing, and the quantitative L2 verification
// suites (uncertainty principle, transverse equidistribution, packet mass on
// balls).

#include <vector>

#include "curvelab/polynomial.hpp"
#include "curvelab/wavepacket.hpp"

namespace curvelab {

struct TangentSpace {
    Vec3 base{};
    std::vector<Vec3> basis;  // orthonormal, dimension = dim Z
};

// Gauss-Newton projection of z onto the zero set (needs z within ~1e-3 of Z
// relative to the local gradient scale).
Vec3 variety_project(const Variety& variety, Vec3 z, int iters = 50);
double variety_distance(const Variety& variety, Vec3 z);

TangentSpace tangent_space(const Variety& variety, Vec3 z_near);

// angle between a direction and span(basis)
double angle_to_subspace(Vec3 dir, const TangentSpace& ts);

struct TangencyScales {
    double R = 0.0;
    double rho = 0.0;
    double delta = 0.05;    // tube-width exponent at scale R
    double delta1 = 0.25;   // nested variant exponent
    double delta2 = 0.15;   // tangency exponent at scale rho
    bool nested = false;    // section-6 variant: rho^{1/2+d1} = R^{1/2+d2}

    // rho solved from rho^{1/2+delta2} = R^{1/2+delta} (or the nested form).
    static TangencyScales primary(double R, double delta, double delta2);
    static TangencyScales nested_variant(double R, double delta2, double delta1);

    double tangent_radius() const;  // rho^{1/2+delta2} == R^{1/2+delta} (etc.)
    double angle_bound(double C = 1.0) const;  // C * rho^{-1/2+delta2} (etc.)
};

enum class TubeClass { tangent, transverse };

struct ClassifyOptions {
    double angle_C = 1.0;
    double neighborhood_C = 2.0;  // the O(.) dilation locating zero points
    int core_samples = 64;
};

TubeClass classify_tube(const Tube& tube, const Variety& variety, Vec3 ball_center,
                        double ball_radius, const TangencyScales& scales,
                        const ClassifyOptions& opts = {});

struct TranslateFamily {
    Variety variety;
    std::vector<Vec3> offsets;
    int dyadic_class = 0;
    double tangent_radius = 0.0;    // rho^{1/2+delta2}
    double coarse_radius = 0.0;     // R^{1/2+delta2}
    std::vector<double> ball_volumes;  // measured |B cap N_rho(Z)| per cover ball
};

TranslateFamily translate_and_pigeonhole(const Variety& variety, Vec3 ball_center,
                                         double ball_radius, const TangencyScales& scales,
                                         std::uint64_t rng_seed);

struct UncertaintyReport {
    double worst_ratio = 0.0;   // max over centers of localized/“full” mass ratio
    double bound = 0.0;         // C * |B_rho| / |B_{1/r}|
    double constant_used = 10.0;
    bool pass = false;
};

// 1D check: G(x) = sum_q spec[q] e^{i x xi_q} dxi with nodes xi_q inside
// B(xi0, r); integrals over intervals, center-swept.
UncertaintyReport uncertainty_check_1d(const std::vector<double>& xi_nodes,
                                       const std::vector<cplx>& spectrum, double xi0, double r,
                                       double rho, double constant = 10.0);

// 2D check on a sampled field with declared spectral support B(xi0, r).
UncertaintyReport uncertainty_check_2d(const SampledField& G, Vec2 xi0, double r, double rho,
                                       double constant = 10.0);

struct EquidistributionReport {
    std::vector<std::pair<double, double>> sweep;  // (rho, mass ratio)
    double fitted_exponent = 0.0;                  // slope vs log(R/rho)
    double residual = 0.0;
    bool pass = false;  // fitted exponent <= -0.4
};

// f = unit-coefficient sum of tangent packets; ratio of the psi2-weighted
// L2 mass on B cap N_{rho^{1/2+delta2}}(Z) against 2B, swept over
// rho = R / 2^i.
EquidistributionReport equidistribution_check(const std::vector<Tile>& packets,
                                              const CurveParams& curve, const Variety& plane_z,
                                              Vec3 ball_center, double ball_radius, double R,
                                              double delta2, double eps = 0.1, int levels = 4);

struct PacketMassReport {
    double mass = 0.0;      // || e^{itH} f psi2 ||^2 over B(z, 10 r)
    double f_norm2 = 0.0;   // ||f||^2 including packet cross terms
    double ratio = 0.0;     // mass / ||f||^2
    double lower = 0.0;     // r/2
    double upper = 0.0;     // 20 r
    bool vacuous = false;   // f == 0 guard
    bool pass = false;
};

// Every contributing tube must meet B(z, r) and t0 must sit inside the psi2
// plateau; both are contract-checked.
PacketMassReport packet_ball_mass_check(const std::vector<Tile>& packets,
                                        const CurveParams& curve, Vec3 z_center, double r,
                                        double R, double eps = 0.1);

// Gram matrix of unit-norm packets (frequency-side quadrature); used to
// compute ||sum of packets||^2 exactly.
double packet_sum_norm2(const std::vector<Tile>& packets);

} // namespace curvelab
