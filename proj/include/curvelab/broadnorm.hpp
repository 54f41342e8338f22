#pragma once

// K-cell grids, frequency caps, the per-cell minimax broad mass, and the
// BL^p_{k,A}L^q norms with their inequality suite.

#include <array>
#include <functional>
#include <vector>

#include "curvelab/propagator.hpp"
#include "curvelab/vec3.hpp"

namespace curvelab {

struct BroadParams {
    int K = 2;       // cell scale and cap count parameter
    int A = 1;       // number of absorbed direction clusters
    double p = 3.2;  // in [2, 16]
    double q = 2.0;  // L^q aggregation exponent (ignored in the L^inf mode)
    double M = 1.0;  // datum frequency scale, supp fhat in B(xi0, 1/M)
    static constexpr int k = 2;

    void validate(double R) const;
};

// Square cap of the K x K subdivision of B(xi0, 1/M); the 9-point sample set
// (corners, edge midpoints, center) drives the angle predicates, the
// half-open rect gives the exact partition fhat|_tau.
struct Cap {
    Vec2 center{0.0, 0.0};
    double half_side = 0.0;
    FreqCap rect;
    std::array<Vec2, 9> samples() const;
};

std::vector<Cap> cap_decompose(const FrequencySupport& support, int K);

struct Subspace1D {
    Vec3 direction{0.0, 0.0, 1.0};
    explicit Subspace1D(Vec3 d) : direction(d.normalized()) {
        if (!(d.norm() > 0.0)) throw std::invalid_argument("Subspace1D: zero direction");
    }
};

// tau in V iff inf over the cap samples of Angle((-2xi,1)/|.|, V) <= 1/(KM).
bool cap_in_subspace(const Cap& tau, const Subspace1D& V, int K, double M);

struct CellGrid {
    double R = 0.0;
    int K = 2;
    std::vector<Vec2> ball_centers;  // squares of half-side K tiling B(0,R)
    int intervals = 0;               // [0,R] split into length-K intervals

    std::size_t cell_count() const { return ball_centers.size() * intervals; }
};

CellGrid make_cell_grid(double R, int K);

struct LocalBroadMass {
    std::size_t ball_index = 0;
    int interval_index = 0;
    double value = 0.0;
    std::vector<int> argmin_directions;  // indices into the candidate set
};

// Axis-aligned space-time region for the weighted norms.
struct Region {
    enum class Kind { all, empty, box };
    Kind kind = Kind::all;
    Vec2 x_lo{0.0, 0.0}, x_hi{0.0, 0.0};
    double t_lo = 0.0, t_hi = 0.0;
    bool contains(Vec2 x, double t) const {
        switch (kind) {
            case Kind::all: return true;
            case Kind::empty: return false;
            default:
                return x.x >= x_lo.x && x.x < x_hi.x && x.y >= x_lo.y && x.y < x_hi.y &&
                       t >= t_lo && t < t_hi;
        }
    }
    static Region all() { return {}; }
    static Region empty() {
        Region r;
        r.kind = Kind::empty;
        return r;
    }
    static Region box(Vec2 lo, Vec2 hi, double t0, double t1) {
        Region r;
        r.kind = Kind::box;
        r.x_lo = lo;
        r.x_hi = hi;
        r.t_lo = t0;
        r.t_hi = t1;
        return r;
    }
};

// Precomputes the per-cell, per-cap integrals of |e^{itH} f_tau|^p psi2^p on
// the (K/4)-spaced quadrature subgrid, then answers minimax and norm queries.
class BroadEngine {
public:
    BroadEngine(const SampledField& f, const BroadParams& params, double R,
                const CurveParams& curve, double eps = 0.1);

    const CellGrid& cells() const { return cells_; }
    const std::vector<Cap>& caps() const { return caps_; }
    const std::vector<Vec3>& candidate_directions() const { return directions_; }

    // Exact minimax over A-subsets of the candidate direction set.
    LocalBroadMass local_broad_mass(std::size_t ball_index, int interval_index, int A) const;

    enum class QMode { lq, linf };
    double broad_norm(const Region& U, int A, QMode mode) const;

    double cell_integral(std::size_t ball_index, int interval_index, std::size_t cap) const;
    double region_weight(const Region& U, std::size_t ball_index, int interval_index) const;

private:
    BroadParams params_;
    double R_;
    CellGrid cells_;
    std::vector<Cap> caps_;
    std::vector<Vec3> directions_;
    std::vector<std::uint64_t> absorb_masks_;   // per-direction cap absorption
    std::vector<double> integrals_;             // [cell][cap]
    double subgrid_step_ = 0.0;

    double minimax(std::size_t cell_offset, int A, std::vector<int>* argmin) const;
};

struct Lemma33Report {
    // (1) p-th power subadditivity over U1 u U2
    double lhs1 = 0.0, rhs1 = 0.0;
    // (2) quasi-triangle with A = A1 + A2; reports the measured constant
    double lhs2 = 0.0, rhs2 = 0.0, measured_cp = 0.0;
    // (3) Hoelder comparison with the |S_U| |I_U|^{1/q} factor
    double lhs3 = 0.0, rhs3 = 0.0, measured_ck = 0.0;
    bool pass1 = false, pass2 = false, pass3 = false;
};

Lemma33Report lemma33_suite(const SampledField& f, const SampledField& g, const Region& U1,
                            const Region& U2, const BroadParams& params, int A1, int A2,
                            double r_exponent, double R, const CurveParams& curve);

} // namespace curvelab
