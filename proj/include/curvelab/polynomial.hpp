#pragma once

// Constructive polynomial partitioning on discrete mass distributions:
// equal-split polynomials found by sphere sampling plus exact coordinate
// line sweeps, iterated sign-cell decompositions, wall neighborhoods, and
// transverse-complete-intersection checks.

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "curvelab/vec3.hpp"

namespace curvelab {

// Dense m-variate polynomial (m <= 3) over the monomial basis of total
// degree <= degree.
struct MultiPoly {
    int vars = 3;
    int degree = 0;
    std::vector<std::array<int, 3>> exponents;
    std::vector<double> coeffs;

    static MultiPoly zero(int vars, int degree);
    static std::size_t basis_size(int vars, int degree);

    double eval(const std::array<double, 3>& u) const;
    std::array<double, 3> gradient(const std::array<double, 3>& u) const;
    double coeff_norm() const;
    void normalize();
};

struct ProjectedPolySpace {
    int m = 3;                    // subspace dimension
    std::array<Vec3, 3> basis{};  // orthonormal rows spanning Pi
    int degree = 2;

    static ProjectedPolySpace full(int degree);
    static ProjectedPolySpace line(Vec3 axis, int degree);
    static ProjectedPolySpace plane(Vec3 b1, Vec3 b2, int degree);
    std::size_t dimension() const { return MultiPoly::basis_size(m, degree); }
    std::array<double, 3> project(Vec3 z) const;
};

// P(z) = P_Pi(pi(z)); constant along directions orthogonal to Pi.
struct ProjectedPoly {
    ProjectedPolySpace space;
    MultiPoly poly;

    double eval(Vec3 z) const { return poly.eval(space.project(z)); }
    Vec3 gradient(Vec3 z) const;
    int degree() const { return poly.degree; }
    // Expansion into trivariate monomials (serialization / cross-checks).
    MultiPoly expand() const;
};

struct MassPoints {
    std::vector<Vec3> points;
    std::vector<double> weights;
    double total = 0.0;

    void push(Vec3 z, double w) {
        points.push_back(z);
        weights.push_back(w);
        total += w;
    }
    static MassPoints uniform_box(Vec3 lo, Vec3 hi, int per_side);
};

struct EqualSplitResult {
    ProjectedPoly poly;
    std::vector<double> residuals;  // |mass(P>0) - mass(P<0)| / total, per mass
    bool converged = false;
    int sweeps_used = 0;
};

struct EqualSplitOptions {
    double tol = 1e-3;           // relative to each mass total
    double tol_absolute = 0.0;   // optional absolute |G_j| target (0 = off)
    int restarts = 24;
    int max_sweeps = 80;
    std::uint64_t seed = 1;
};

EqualSplitResult equal_split_polynomial(const std::vector<MassPoints>& masses,
                                        const ProjectedPolySpace& space,
                                        const EqualSplitOptions& opts = {});

struct SignCellDecomposition {
    ProjectedPolySpace space;
    std::vector<ProjectedPoly> factors;  // Q_1 ... Q_s
    double wall_width = 0.0;
    int rounds = 0;

    int product_degree() const;
    std::vector<int> sign_vector(Vec3 z) const;  // entries in {-1, +1}
    double product_eval(Vec3 z) const;

    // First-order distance proxy to the zero set: min over factors of
    // |Q(z)| / max(|grad Q(z)|, eta).
    double wall_distance_proxy(Vec3 z) const;
    bool in_wall(Vec3 z) const { return wall_distance_proxy(z) <= wall_width; }

    // cell masses keyed by sign vector
    std::map<std::vector<int>, double> cell_masses(const MassPoints& mass) const;
    std::vector<double> per_round_residuals;  // copied from the split results
    bool converged = true;
};

SignCellDecomposition build_partition(const MassPoints& mass, const ProjectedPolySpace& space,
                                      int D, double wall_width = 0.0,
                                      const EqualSplitOptions& opts = {});

struct Variety {
    std::vector<ProjectedPoly> defining;  // 3-m polynomials
    int dimension() const { return 3 - static_cast<int>(defining.size()); }
    static Variety plane(Vec3 normal, double offset);          // dim 2
    static Variety line_x_axis_free(Vec3 n1, double c1, Vec3 n2, double c2);  // dim 1
};

struct TciReport {
    double min_wedge_norm = 0.0;
    double gradient_scale = 0.0;
    int points_checked = 0;
    bool zero_set_found = false;
    bool pass = false;  // vacuous pass (flagged) when no zero point is found
};

TciReport tci_check(const Variety& variety, Vec3 box_lo, Vec3 box_hi, int sample_budget);

struct IncidenceReport {
    int max_cells_per_tube = 0;
    int degree_bound = 0;  // deg(P) + 1
    bool pass = false;
};

struct CoreLine {
    Vec2 base{0.0, 0.0};     // x at t = 0
    Vec2 velocity{0.0, 0.0}; // dx/dt (tube core: -2 c(theta))
    double t_max = 1.0;
    Vec3 at(double t) const { return {base.x + velocity.x * t, base.y + velocity.y * t, t}; }
};

IncidenceReport cell_tube_incidence(const SignCellDecomposition& decomp,
                                    const std::vector<CoreLine>& tubes,
                                    int samples_per_tube = 0);

// JSON monomial-list serialization of the expanded trivariate form.
std::string polynomial_to_json(const ProjectedPoly& p);
std::string decomposition_to_json(const SignCellDecomposition& d, const MassPoints& mass);

} // namespace curvelab
