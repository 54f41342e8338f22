#include "curvelab/broadnorm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "curvelab/parallel.hpp"

namespace curvelab {

void BroadParams::validate(double R) const {
    if (K < 2) throw std::invalid_argument("BroadParams: K must be >= 2");
    if (A < 0) throw std::invalid_argument("BroadParams: A must be >= 0");
    if (p < 2.0 || p > 16.0) throw std::invalid_argument("BroadParams: p must lie in [2, 16]");
    if (M < 1.0) throw std::invalid_argument("BroadParams: M must be >= 1");
    if (K * M > std::sqrt(R) * (1.0 + 1e-9))
        throw std::invalid_argument("BroadParams: estimates need K*M <= sqrt(R)");
}

std::array<Vec2, 9> Cap::samples() const {
    std::array<Vec2, 9> s;
    int idx = 0;
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j)
            s[idx++] = Vec2{center.x + i * half_side, center.y + j * half_side};
    return s;
}

std::vector<Cap> cap_decompose(const FrequencySupport& support, int K) {
    if (support.kind != FrequencySupport::Kind::ball)
        throw std::invalid_argument("cap_decompose: support must be a frequency ball");
    if (K < 1) throw std::invalid_argument("cap_decompose: K must be >= 1");
    const double r = support.radius;
    const double side = 2.0 * r / K;
    std::vector<Cap> caps;
    for (int i = 0; i < K; ++i) {
        for (int j = 0; j < K; ++j) {
            Cap c;
            c.half_side = 0.5 * side;
            c.center = Vec2{support.center.x - r + (i + 0.5) * side,
                            support.center.y - r + (j + 0.5) * side};
            // skip cells that miss the disk entirely
            Vec2 d{std::max(0.0, std::abs(c.center.x - support.center.x) - c.half_side),
                   std::max(0.0, std::abs(c.center.y - support.center.y) - c.half_side)};
            if (d.norm() > r) continue;
            c.rect = FreqCap::rect(Vec2{c.center.x - c.half_side, c.center.y - c.half_side},
                                   Vec2{c.center.x + c.half_side, c.center.y + c.half_side});
            caps.push_back(c);
        }
    }
    return caps;
}

bool cap_in_subspace(const Cap& tau, const Subspace1D& V, int K, double M) {
    double best = kPi;
    for (const Vec2& xi : tau.samples()) {
        const Vec3 g{-2.0 * xi.x, -2.0 * xi.y, 1.0};
        best = std::min(best, angle_to_line(g, V.direction));
    }
    return best <= 1.0 / (K * M) + 1e-15;
}

CellGrid make_cell_grid(double R, int K) {
    CellGrid grid;
    grid.R = R;
    grid.K = K;
    const int per_side = static_cast<int>(std::ceil(R / (2.0 * K)));  // squares of side 2K
    for (int i = -per_side; i < per_side; ++i) {
        for (int j = -per_side; j < per_side; ++j) {
            Vec2 c{(i + 0.5) * 2.0 * K, (j + 0.5) * 2.0 * K};
            // keep squares meeting B(0,R)
            Vec2 d{std::max(0.0, std::abs(c.x) - double(K)), std::max(0.0, std::abs(c.y) - double(K))};
            if (d.norm() <= R) grid.ball_centers.push_back(c);
        }
    }
    grid.intervals = static_cast<int>(std::ceil(R / K));
    return grid;
}

namespace {

std::vector<Vec3> build_candidate_directions(const std::vector<Cap>& caps) {
    std::vector<Vec3> dirs;
    dirs.reserve(caps.size() + 32);
    for (const Cap& c : caps)
        dirs.push_back(Vec3{-2.0 * c.center.x, -2.0 * c.center.y, 1.0}.normalized());
    // 32 extra directions, Fibonacci-spread over the upper hemisphere
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < 32; ++i) {
        const double z = (i + 0.5) / 32.0;
        const double rr = std::sqrt(1.0 - z * z);
        const double ang = golden * i;
        dirs.push_back(Vec3{rr * std::cos(ang), rr * std::sin(ang), z});
    }
    return dirs;
}

} // namespace

BroadEngine::BroadEngine(const SampledField& f, const BroadParams& params, double R,
                         const CurveParams& curve, double eps)
    : params_(params), R_(R) {
    params.validate(R);
    if (!f.support() || f.support()->kind != FrequencySupport::Kind::ball)
        throw std::invalid_argument("BroadEngine: field must declare a ball support");
    if (std::abs(f.support()->radius - 1.0 / params.M) > 1e-9)
        throw std::invalid_argument("BroadEngine: support radius must equal 1/M");

    cells_ = make_cell_grid(R, params.K);
    caps_ = cap_decompose(*f.support(), params.K);
    if (caps_.size() > 64)
        throw std::invalid_argument("BroadEngine: more than 64 caps unsupported");
    directions_ = build_candidate_directions(caps_);
    absorb_masks_.assign(directions_.size(), 0);
    for (std::size_t d = 0; d < directions_.size(); ++d) {
        Subspace1D V(directions_[d]);
        for (std::size_t c = 0; c < caps_.size(); ++c)
            if (cap_in_subspace(caps_[c], V, params.K, params.M))
                absorb_masks_[d] |= (1ULL << c);
    }

    // Per-cell integrals of |e^{itH} f_tau|^p psi2^p on the (K/4)-subgrid.
    const double step = params.K / 4.0;
    subgrid_step_ = step;
    const TimeCutoffs cut{R, eps};
    const std::size_t ncells = cells_.cell_count();
    integrals_.assign(ncells * caps_.size(), 0.0);

    const SampledField F = f.side() == Side::frequency ? f : forward_transform(f);
    const GridSpec& g = F.grid();
    const double h = g.spacing();
    const int stride = std::max(1, static_cast<int>(std::llround(step / h)));
    if (std::abs(stride * h - step) > 1e-9)
        throw std::invalid_argument("BroadEngine: grid spacing must divide K/4");

    const int tnodes_per_interval = 4;
    const std::size_t nballs = cells_.ball_centers.size();

    parallel_for(static_cast<std::int64_t>(caps_.size()), [&](std::int64_t ci) {
        SampledField ftau = frequency_restrict(F, caps_[ci].rect);
        for (int j = 0; j < cells_.intervals; ++j) {
            for (int s = 0; s < tnodes_per_interval; ++s) {
                const double t = (j + (s + 0.5) / tnodes_per_interval) * params.K;
                const double psi2 = cut.psi2(t / R);
                if (psi2 == 0.0) continue;
                SampledField u = evolve(ftau, t, curve);
                const double wt = std::pow(psi2, params.p) * step * step * step;
                for (std::size_t b = 0; b < nballs; ++b) {
                    const Vec2 c = cells_.ball_centers[b];
                    double acc = 0.0;
                    for (double x = c.x - params.K + 0.5 * step; x < c.x + params.K; x += step) {
                        const int igrid = static_cast<int>(std::llround((x + 0.5 * g.side_length) / h));
                        if (igrid < 0 || igrid >= g.points_per_side) continue;
                        for (double y = c.y - params.K + 0.5 * step; y < c.y + params.K; y += step) {
                            const int jgrid =
                                static_cast<int>(std::llround((y + 0.5 * g.side_length) / h));
                            if (jgrid < 0 || jgrid >= g.points_per_side) continue;
                            acc += std::pow(std::abs(u.at(igrid, jgrid)), params.p);
                        }
                    }
                    integrals_[(b * cells_.intervals + j) * caps_.size() + ci] += acc * wt;
                }
            }
        }
    });
}

double BroadEngine::cell_integral(std::size_t b, int j, std::size_t cap) const {
    return integrals_[(b * cells_.intervals + j) * caps_.size() + cap];
}

double BroadEngine::minimax(std::size_t cell_offset, int A, std::vector<int>* argmin) const {
    const std::size_t ncaps = caps_.size();
    auto value_for = [&](std::uint64_t absorbed) {
        double best = 0.0;  // max over an empty family is 0
        for (std::size_t c = 0; c < ncaps; ++c)
            if (!(absorbed & (1ULL << c)))
                best = std::max(best, integrals_[cell_offset + c]);
        return best;
    };
    if (A == 0) {
        if (argmin) argmin->clear();
        return value_for(0);
    }

    // Exact search over reachable absorption sets: BFS on cap bitmasks where
    // one step applies one candidate direction. dist[m] == k means some
    // k-subset of directions absorbs exactly the caps in m, so scanning the
    // states with dist <= A reproduces the subset minimax.
    if (ncaps > 20)
        throw std::invalid_argument("BroadEngine: minimax supports at most 20 caps");
    const std::size_t nstates = 1ULL << ncaps;
    std::vector<std::int8_t> dist(nstates, -1);
    std::vector<std::int32_t> prev_state(nstates, -1), prev_dir(nstates, -1);
    std::vector<std::uint32_t> frontier{0};
    dist[0] = 0;
    for (int layer = 0; layer < A && !frontier.empty(); ++layer) {
        std::vector<std::uint32_t> next;
        for (std::uint32_t s : frontier) {
            for (std::size_t d = 0; d < absorb_masks_.size(); ++d) {
                const std::uint32_t t = s | static_cast<std::uint32_t>(absorb_masks_[d]);
                if (dist[t] < 0) {
                    dist[t] = static_cast<std::int8_t>(layer + 1);
                    prev_state[t] = static_cast<std::int32_t>(s);
                    prev_dir[t] = static_cast<std::int32_t>(d);
                    next.push_back(t);
                }
            }
        }
        frontier = std::move(next);
    }
    double best = value_for(0);
    std::uint32_t best_state = 0;
    for (std::size_t m = 1; m < nstates; ++m) {
        if (dist[m] < 0) continue;
        const double v = value_for(m);
        if (v < best) {
            best = v;
            best_state = static_cast<std::uint32_t>(m);
        }
    }
    if (argmin) {
        argmin->clear();
        for (std::uint32_t s = best_state; s != 0;
             s = static_cast<std::uint32_t>(prev_state[s]))
            argmin->push_back(prev_dir[s]);
    }
    return best;
}

LocalBroadMass BroadEngine::local_broad_mass(std::size_t b, int j, int A) const {
    LocalBroadMass m;
    m.ball_index = b;
    m.interval_index = j;
    const std::size_t off = (b * cells_.intervals + j) * caps_.size();
    m.value = minimax(off, A, &m.argmin_directions);
    return m;
}

double BroadEngine::region_weight(const Region& U, std::size_t b, int j) const {
    if (U.kind == Region::Kind::all) return 1.0;
    if (U.kind == Region::Kind::empty) return 0.0;
    const Vec2 c = cells_.ball_centers[b];
    const double step = subgrid_step_;
    const double K = params_.K;
    int inside = 0, total = 0;
    for (double x = c.x - K + 0.5 * step; x < c.x + K; x += step) {
        for (double y = c.y - K + 0.5 * step; y < c.y + K; y += step) {
            for (int s = 0; s < 4; ++s) {
                const double t = (j + (s + 0.5) / 4.0) * K;
                ++total;
                if (U.contains(Vec2{x, y}, t)) ++inside;
            }
        }
    }
    return total > 0 ? double(inside) / total : 0.0;
}

double BroadEngine::broad_norm(const Region& U, int A, QMode mode) const {
    const std::size_t nballs = cells_.ball_centers.size();
    double total = 0.0;
    for (std::size_t b = 0; b < nballs; ++b) {
        double agg = 0.0;
        for (int j = 0; j < cells_.intervals; ++j) {
            const double w = region_weight(U, b, j);
            if (w == 0.0) continue;
            const double mu = minimax((b * cells_.intervals + j) * caps_.size(), A, nullptr);
            const double term = w * mu;
            if (mode == QMode::linf)
                agg = std::max(agg, term);
            else
                agg += std::pow(term, params_.q);
        }
        total += mode == QMode::linf ? agg : std::pow(agg, 1.0 / params_.q);
    }
    return std::pow(total, 1.0 / params_.p);
}

Lemma33Report lemma33_suite(const SampledField& f, const SampledField& g, const Region& U1,
                            const Region& U2, const BroadParams& params, int A1, int A2,
                            double r_exponent, double R, const CurveParams& curve) {
    Lemma33Report rep;
    const int A = A1 + A2;
    BroadParams pa = params;
    pa.A = A;

    BroadEngine ef(f, pa, R, curve);

    // (1) subadditivity across a union of regions; the union weight is
    // counted on the same subgrid, so w_{U1 u U2} <= w_{U1} + w_{U2} holds
    // sample by sample.
    {
        const std::size_t nballs = ef.cells().ball_centers.size();
        double lhs_p = 0.0, rhs_p1 = 0.0, rhs_p2 = 0.0;
        for (std::size_t b = 0; b < nballs; ++b) {
            double sup_u = 0.0, sup_1 = 0.0, sup_2 = 0.0;
            for (int j = 0; j < ef.cells().intervals; ++j) {
                const double mu = ef.local_broad_mass(b, j, A).value;
                const double w1 = ef.region_weight(U1, b, j);
                const double w2 = ef.region_weight(U2, b, j);
                // exact subgrid count of the union
                double wu = 0.0;
                {
                    const Vec2 c = ef.cells().ball_centers[b];
                    const double step = params.K / 4.0;
                    int inside = 0, total = 0;
                    for (double x = c.x - params.K + 0.5 * step; x < c.x + params.K; x += step)
                        for (double y = c.y - params.K + 0.5 * step; y < c.y + params.K; y += step)
                            for (int s = 0; s < 4; ++s) {
                                const double t = (j + (s + 0.5) / 4.0) * params.K;
                                ++total;
                                if (U1.contains({x, y}, t) || U2.contains({x, y}, t)) ++inside;
                            }
                    wu = total > 0 ? double(inside) / total : 0.0;
                }
                sup_u = std::max(sup_u, wu * mu);
                sup_1 = std::max(sup_1, w1 * mu);
                sup_2 = std::max(sup_2, w2 * mu);
            }
            lhs_p += sup_u;
            rhs_p1 += sup_1;
            rhs_p2 += sup_2;
        }
        rep.lhs1 = lhs_p;
        rep.rhs1 = rhs_p1 + rhs_p2;
        rep.pass1 = rep.lhs1 <= rep.rhs1 * (1.0 + 1e-9) + 1e-12;
    }

    // (2) quasi-triangle: || f+g ||_{A}^p <= C_p (||f||_{A1}^p + ||g||_{A2}^p)
    {
        SampledField sum = f.side() == Side::frequency ? f : forward_transform(f);
        const SampledField G = g.side() == Side::frequency ? g : forward_transform(g);
        for (std::size_t i = 0; i < sum.values().size(); ++i) sum.values()[i] += G.values()[i];
        sum.declare_support(*f.support());
        BroadEngine es(sum, pa, R, curve);
        BroadParams p1 = params;
        p1.A = A1;
        BroadParams p2 = params;
        p2.A = A2;
        BroadEngine eg(g, p2, R, curve);
        const Region all = Region::all();
        const double lhs = std::pow(es.broad_norm(all, A, BroadEngine::QMode::lq), params.p);
        const double nf = std::pow(ef.broad_norm(all, A1, BroadEngine::QMode::lq), params.p);
        const double ng = std::pow(eg.broad_norm(all, A2, BroadEngine::QMode::lq), params.p);
        rep.lhs2 = lhs;
        const double cp = std::pow(2.0, params.p - 1.0);
        rep.rhs2 = cp * (nf + ng);
        rep.measured_cp = (nf + ng) > 0.0 ? lhs / (nf + ng) : 0.0;
        rep.pass2 = rep.lhs2 <= rep.rhs2 * (1.0 + 1e-9) + 1e-12;
    }

    // (3) Hoelder comparison on U1 against the r-exponent norm
    {
        BroadParams pr = pa;
        pr.p = r_exponent;
        BroadEngine er(f, pr, R, curve);
        const double lhs = ef.broad_norm(U1, A, BroadEngine::QMode::lq);
        const double rhs_norm = er.broad_norm(U1, A, BroadEngine::QMode::lq);
        // bounding box of U1
        double sx = 0.0, it = 0.0;
        if (U1.kind == Region::Kind::all) {
            sx = 4.0 * R * R;
            it = R;
        } else if (U1.kind == Region::Kind::box) {
            sx = (U1.x_hi.x - U1.x_lo.x) * (U1.x_hi.y - U1.x_lo.y);
            it = U1.t_hi - U1.t_lo;
        }
        const double factor =
            std::pow(sx * std::pow(it, 1.0 / params.q), 1.0 / params.p - 1.0 / r_exponent);
        rep.lhs3 = lhs;
        rep.measured_ck = (rhs_norm * factor) > 0.0 ? lhs / (rhs_norm * factor) : 0.0;
        rep.rhs3 = 2.0 * factor * rhs_norm;
        rep.pass3 = rep.lhs3 <= rep.rhs3 * (1.0 + 1e-9) + 1e-12;
    }
    return rep;
}

} // namespace curvelab
