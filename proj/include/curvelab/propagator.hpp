#pragma once

// The curve-shifted evolution e^{itH}f(x) = \int e^{i(x.xi - sqrt(t) mu.xi
// + t|xi|^2)} fhat(xi) dxi, its maximal function over a time grid, the two
// smooth time cutoffs, parabolic rescaling, and the frequency-localized
// sup bound.

#include <functional>
#include <vector>

#include "curvelab/grid.hpp"

namespace curvelab {

struct CurveParams {
    Vec2 mu{1.0, 0.0};
    CurveParams() = default;
    explicit CurveParams(Vec2 m) : mu(m) {
        if (std::abs(m.norm() - 1.0) > 1e-12)
            throw std::invalid_argument("CurveParams: mu must be a unit vector");
    }
};

Vec2 curve_position(Vec2 x, double t, const CurveParams& curve);

struct TimeWindow {
    double t_min = 0.0;
    double t_max = 1.0;
    int samples = 64;
    bool geometric = true;

    TimeWindow() = default;
    TimeWindow(double lo, double hi, int count, bool geom = true);

    // Geometric grid over (t_min, t_max] with `per_block` nodes per dyadic
    // block; refining by doubling per_block keeps every existing node.
    static TimeWindow dyadic(double t_min, double t_max, int per_block);

    std::vector<double> nodes() const;
    TimeWindow refined() const;  // doubles the node count, supersets nodes()
};

// psi1 == 1 on [0, R^{eps-1}], psi2 == 1 on [R^{eps-1}, 1]; quintic
// smoothstep transitions of relative width 0.05 * R^{eps-1}. Arguments are
// t/R as in the estimates.
struct TimeCutoffs {
    double R = 1.0;
    double eps = 0.1;
    double plateau_edge() const { return std::pow(R, eps - 1.0); }
    double transition() const { return 0.05 * plateau_edge(); }
    double psi1(double u) const;
    double psi2(double u) const;
};

SampledField evolve(const SampledField& f, double t, const CurveParams& curve);

// Pointwise max over the time grid of |evolve(f, t)|; real-valued samples.
SampledField maximal_function(const SampledField& f, const TimeWindow& window,
                              const CurveParams& curve);

struct BaseBoundReport {
    double lhs = 0.0;       // sup_{x,t} |e^{itH} f|
    double rhs = 0.0;       // sqrt(pi) * M^{-1} * ||fhat||_{L2(dxi)}
    double l1_bound = 0.0;  // discrete ||fhat||_{L1(dxi)}; lhs <= l1_bound exactly
    double ratio = 0.0;     // lhs / (M^{-1} ||fhat||), must stay <= sqrt(pi)
    bool pass = false;
};

// Checks Cauchy-Schwarz over the declared frequency ball B(xi0, M^{-1}):
// sup |e^{itH} f| <= ||fhat||_{L1} <= sqrt(pi) M^{-1} ||fhat||_{L2(dxi)}.
// Requires the grid to resolve the ball (radius >= 4 frequency spacings),
// otherwise the discrete area overshoots the continuum constant.
BaseBoundReport base_bound_check(const SampledField& f, const TimeWindow& window,
                                 const CurveParams& curve);

// ghat1(eta) = ghat(eta / R) on a grid shrunk by R; satisfies
// e^{itH} g(x) = R^{-2} e^{isH} g1(y) at x = R y, t = R^2 s, and
// ||g|| = R^{-1} ||g1|| in both norm calibrations.
SampledField parabolic_rescale(const SampledField& g, double R);

// Direct quadrature of the evolution at one space-time point (no FFT);
// reference path for identity checks at arbitrary (x, t).
cplx evolve_at(const SampledField& f, Vec2 x, double t, const CurveParams& curve);

// fhat(xi) = psi((xi - lambda mu) / sqrt(lambda)) with the fixed plateau
// bump; the necessity example family.
SampledField remark1_datum(const GridSpec& g, double lambda, const CurveParams& curve);

// Fixed bump used by remark1_datum, exposed for the norm oracles.
double remark1_bump(double u);

} // namespace curvelab
