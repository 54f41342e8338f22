#include "curvelab/variety.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "curvelab/bump.hpp"
#include "curvelab/parallel.hpp"

namespace curvelab {

Vec3 variety_project(const Variety& variety, Vec3 z, int iters) {
    const int nd = static_cast<int>(variety.defining.size());
    for (int it = 0; it < iters; ++it) {
        double res = 0.0;
        for (const auto& p : variety.defining) res = std::max(res, std::abs(p.eval(z)));
        if (res < 1e-12) break;
        if (nd == 1) {
            const double f = variety.defining[0].eval(z);
            const Vec3 g = variety.defining[0].gradient(z);
            const double g2 = g.norm2();
            if (g2 < 1e-18) break;
            z = z - g * (f / g2);
        } else {
            const double f1 = variety.defining[0].eval(z);
            const double f2 = variety.defining[1].eval(z);
            const Vec3 g1 = variety.defining[0].gradient(z);
            const Vec3 g2 = variety.defining[1].gradient(z);
            const double a11 = g1.dot(g1), a12 = g1.dot(g2), a22 = g2.dot(g2);
            const double det = a11 * a22 - a12 * a12;
            if (std::abs(det) < 1e-18) break;
            const double l1 = (a22 * f1 - a12 * f2) / det;
            const double l2 = (a11 * f2 - a12 * f1) / det;
            z = z - (g1 * l1 + g2 * l2);
        }
    }
    return z;
}

double variety_distance(const Variety& variety, Vec3 z) {
    return (variety_project(variety, z) - z).norm();
}

TangentSpace tangent_space(const Variety& variety, Vec3 z_near) {
    Vec3 z = variety_project(variety, z_near);
    TangentSpace ts;
    ts.base = z;
    const int nd = static_cast<int>(variety.defining.size());
    if (nd == 1) {
        const Vec3 g = variety.defining[0].gradient(z);
        if (g.norm() < 1e-8) throw std::runtime_error("tangent_space: degenerate gradient");
        const Vec3 n = g.normalized();
        // least-aligned axis seeds the in-plane frame
        Vec3 seed = std::abs(n.x) <= std::abs(n.y) && std::abs(n.x) <= std::abs(n.t)
                        ? Vec3{1, 0, 0}
                        : (std::abs(n.y) <= std::abs(n.t) ? Vec3{0, 1, 0} : Vec3{0, 0, 1});
        const Vec3 v1 = n.cross(seed).normalized();
        const Vec3 v2 = n.cross(v1).normalized();
        ts.basis = {v1, v2};
    } else {
        const Vec3 g1 = variety.defining[0].gradient(z);
        const Vec3 g2 = variety.defining[1].gradient(z);
        const Vec3 w = g1.cross(g2);
        if (w.norm() < 1e-8) throw std::runtime_error("tangent_space: degenerate wedge");
        ts.basis = {w.normalized()};
    }
    return ts;
}

double angle_to_subspace(Vec3 dir, const TangentSpace& ts) {
    const Vec3 u = dir.normalized();
    double proj2 = 0.0;
    for (const Vec3& b : ts.basis) {
        const double c = u.dot(b);
        proj2 += c * c;
    }
    proj2 = std::min(1.0, proj2);
    return std::asin(std::sqrt(std::max(0.0, 1.0 - proj2)));
}

TangencyScales TangencyScales::primary(double R, double delta, double delta2) {
    TangencyScales s;
    s.R = R;
    s.delta = delta;
    s.delta2 = delta2;
    s.nested = false;
    s.rho = std::pow(R, (0.5 + delta) / (0.5 + delta2));
    return s;
}

TangencyScales TangencyScales::nested_variant(double R, double delta2, double delta1) {
    TangencyScales s;
    s.R = R;
    s.delta1 = delta1;
    s.delta2 = delta2;
    s.nested = true;
    s.rho = std::pow(R, (0.5 + delta2) / (0.5 + delta1));
    return s;
}

double TangencyScales::tangent_radius() const {
    return nested ? std::pow(rho, 0.5 + delta1) : std::pow(rho, 0.5 + delta2);
}

double TangencyScales::angle_bound(double C) const {
    return C * (nested ? std::pow(rho, -0.5 + delta1) : std::pow(rho, -0.5 + delta2));
}

TubeClass classify_tube(const Tube& tube, const Variety& variety, Vec3 ball_center,
                        double ball_radius, const TangencyScales& scales,
                        const ClassifyOptions& opts) {
    const double width = scales.tangent_radius();
    const double angle_max = scales.angle_bound(opts.angle_C);
    const double nbhd = opts.neighborhood_C * width;
    const double twoB = 2.0 * ball_radius;

    bool any_in_ball = false;
    for (int s = 0; s < opts.core_samples; ++s) {
        const double t = tube.tile.R * (s + 0.5) / opts.core_samples;
        const Vec2 x = tube.core_at(t);
        const Vec3 z{x.x, x.y, t};
        if ((z - ball_center).norm() > twoB) continue;
        any_in_ball = true;
        // distance condition at the core sample
        const Vec3 proj = variety_project(variety, z);
        const double dist = (proj - z).norm();
        if (dist > width) return TubeClass::transverse;
        // angle condition at located zero-set points near the tube
        if (dist <= nbhd && (proj - ball_center).norm() <= twoB) {
            TangentSpace ts = tangent_space(variety, proj);
            if (angle_to_subspace(tube.direction(), ts) > angle_max) return TubeClass::transverse;
        }
    }
    (void)any_in_ball;
    return TubeClass::tangent;
}

TranslateFamily translate_and_pigeonhole(const Variety& variety, Vec3 ball_center,
                                         double ball_radius, const TangencyScales& scales,
                                         std::uint64_t rng_seed) {
    TranslateFamily fam;
    fam.variety = variety;
    fam.tangent_radius = scales.tangent_radius();
    fam.coarse_radius = std::pow(scales.R, 0.5 + scales.delta2);

    const double r = fam.coarse_radius;
    const double w = fam.tangent_radius;

    // Disjoint r-cell cover of N_r(Z) within the ball; per-cell measure of
    // the w-neighborhood by midpoint counting.
    const int span = std::max(1, static_cast<int>(std::ceil(ball_radius / r)));
    const int sub = 6;
    std::vector<double> volumes;
    for (int i = -span; i < span; ++i) {
        for (int j = -span; j < span; ++j) {
            for (int k = -span; k < span; ++k) {
                const Vec3 c = ball_center + Vec3{(i + 0.5) * r, (j + 0.5) * r, (k + 0.5) * r};
                if ((c - ball_center).norm() > ball_radius) continue;
                if (variety_distance(variety, c) > r * std::sqrt(3.0)) continue;
                int cnt = 0;
                for (int a = 0; a < sub; ++a)
                    for (int b = 0; b < sub; ++b)
                        for (int d = 0; d < sub; ++d) {
                            const Vec3 p = c + Vec3{(a + 0.5) / sub - 0.5, (b + 0.5) / sub - 0.5,
                                                    (d + 0.5) / sub - 0.5} *
                                                   r;
                            if (variety_distance(variety, p) <= w) ++cnt;
                        }
                if (cnt > 0) volumes.push_back(double(cnt) / (sub * sub * sub) * r * r * r);
            }
        }
    }
    fam.ball_volumes = volumes;

    // dyadic classes on the measured volumes; keep the class with the
    // largest total measure
    int best_class = 0;
    double best_total = -1.0;
    if (!volumes.empty()) {
        const double vmax = *std::max_element(volumes.begin(), volumes.end());
        std::map<int, double> totals;
        for (double v : volumes) {
            const int s = static_cast<int>(std::floor(std::log2(std::max(v, vmax * 1e-9))));
            totals[s] += v;
        }
        for (const auto& [s, tot] : totals)
            if (tot > best_total) {
                best_total = tot;
                best_class = s;
            }
    }
    fam.dyadic_class = best_class;

    const double ball_vol = 4.0 / 3.0 * kPi * r * r * r;
    const double class_vol = std::ldexp(1.0, best_class);
    std::size_t count = volumes.empty()
                            ? 1
                            : static_cast<std::size_t>(std::clamp(ball_vol / class_vol, 1.0, 512.0));

    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    while (fam.offsets.size() < count) {
        Vec3 b{unif(rng), unif(rng), unif(rng)};
        if (b.norm() <= 1.0) fam.offsets.push_back(b * r);
    }
    return fam;
}

UncertaintyReport uncertainty_check_1d(const std::vector<double>& xi_nodes,
                                       const std::vector<cplx>& spectrum, double xi0, double r,
                                       double rho, double constant) {
    if (xi_nodes.size() != spectrum.size() || xi_nodes.empty())
        throw std::invalid_argument("uncertainty_check_1d: node/spectrum size mismatch");
    for (double xi : xi_nodes)
        if (std::abs(xi - xi0) > r * (1.0 + 1e-12))
            throw std::invalid_argument("uncertainty_check_1d: spectrum leaks outside B(xi0, r)");
    const double big = 1.0 / r;
    if (rho > big * (1.0 + 1e-12))
        throw std::invalid_argument("uncertainty_check_1d: need rho <= 1/r");

    auto G = [&](double x) {
        cplx acc{0.0, 0.0};
        for (std::size_t q = 0; q < xi_nodes.size(); ++q)
            acc += spectrum[q] * std::polar(1.0, x * (xi_nodes[q] - xi0));
        return acc;  // carrier removed; |G| is unchanged
    };
    // midpoint quadrature of |G|^2 over [c - a, c + a]
    auto mass = [&](double c, double a, int n) {
        double s = 0.0;
        const double h = 2.0 * a / n;
        for (int i = 0; i < n; ++i) s += std::norm(G(c - a + (i + 0.5) * h));
        return s * h;
    };

    UncertaintyReport rep;
    rep.constant_used = constant;
    const int centers = 17;
    double worst = 0.0;
    for (int ci = 0; ci < centers; ++ci) {
        const double c = (ci - centers / 2) * (big / 4.0);
        const double num = mass(c, rho, 129);
        const double den = mass(c, big, 257);
        if (den > 0.0) worst = std::max(worst, num / den);
    }
    rep.worst_ratio = worst;
    rep.bound = constant * rho / big;
    rep.pass = worst <= rep.bound * (1.0 + 1e-9);
    return rep;
}

UncertaintyReport uncertainty_check_2d(const SampledField& G, Vec2 xi0, double r, double rho,
                                       double constant) {
    const SampledField F = G.side() == Side::frequency ? G : forward_transform(G);
    // verified spectral support
    double inside = 0.0, outside = 0.0;
    const int n = F.n();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double m = std::norm(F.at(i, j));
            if ((Vec2{F.grid().freq(i), F.grid().freq(j)} - xi0).norm() <= r)
                inside += m;
            else
                outside += m;
        }
    if (outside > 1e-8 * (inside + outside))
        throw std::invalid_argument("uncertainty_check_2d: spectrum leaks outside B(xi0, r)");
    const double big = 1.0 / r;
    if (rho > big * (1.0 + 1e-12))
        throw std::invalid_argument("uncertainty_check_2d: need rho <= 1/r");

    const SampledField u = inverse_transform(F);
    auto mass = [&](Vec2 c, double a) {
        double s = 0.0;
        const double h = u.grid().spacing();
        const double a2 = a * a;
        for (int i = 0; i < n; ++i) {
            const double dx = u.grid().coord(i) - c.x;
            if (dx * dx > a2) continue;
            for (int j = 0; j < n; ++j) {
                const double dy = u.grid().coord(j) - c.y;
                if (dx * dx + dy * dy <= a2) s += std::norm(u.at(i, j)) * h * h;
            }
        }
        return s;
    };

    UncertaintyReport rep;
    rep.constant_used = constant;
    double worst = 0.0;
    const int centers = 5;
    for (int ci = -centers / 2; ci <= centers / 2; ++ci) {
        for (int cj = -centers / 2; cj <= centers / 2; ++cj) {
            const Vec2 c{ci * big / 4.0, cj * big / 4.0};
            if (c.norm() + big > 0.5 * u.grid().side_length) continue;
            const double num = mass(c, rho);
            const double den = mass(c, big);
            if (den > 0.0) worst = std::max(worst, num / den);
        }
    }
    rep.worst_ratio = worst;
    rep.bound = constant * (rho * rho) / (big * big);
    rep.pass = worst <= rep.bound * (1.0 + 1e-9);
    return rep;
}

namespace {

// psi2-weighted |sum of evolved packets|^2 accumulated over a lattice scan
// of a space-time ball, with per-slice 1D factor caching.
struct PacketSumScan {
    const std::vector<Tile>* tiles;
    const CurveParams* curve;
    double R, eps;

    template <typename Weight>
    double mass(Vec3 center, double radius, double h, Weight&& weight) const {
        const TimeCutoffs cut{R, eps};
        const double t_lo = std::max(0.0, center.t - radius);
        const double t_hi = std::min(R, center.t + radius);
        if (t_lo >= t_hi) return 0.0;
        const int nt = std::max(8, static_cast<int>(std::ceil((t_hi - t_lo) / h)));
        const double dt = (t_hi - t_lo) / nt;
        const int nx = static_cast<int>(std::ceil(2.0 * radius / h));
        double total = 0.0;
        for (int q = 0; q < nt; ++q) {
            const double t = t_lo + (q + 0.5) * dt;
            const double psi2 = cut.psi2(t / R);
            if (psi2 == 0.0) continue;
            const double rt = radius * radius - (t - center.t) * (t - center.t);
            if (rt <= 0.0) continue;
            const double slice_r = std::sqrt(rt);
            // cache the separable factors on the slice axes
            std::vector<std::vector<cplx>> f1(tiles->size()), f2(tiles->size());
            const double st = std::sqrt(t);
            for (std::size_t k = 0; k < tiles->size(); ++k) {
                const Tile& tile = (*tiles)[k];
                const double w = tile.freq_side();
                f1[k].resize(nx);
                f2[k].resize(nx);
                for (int i = 0; i < nx; ++i) {
                    const double x = center.x - radius + (i + 0.5) * h;
                    const double y = center.y - radius + (i + 0.5) * h;
                    f1[k][i] = evolved_packet_axis_value(tile, curve->mu.x, st, t, x, 0);
                    f2[k][i] = evolved_packet_axis_value(tile, curve->mu.y, st, t, y, 1);
                }
            }
            const double wt = psi2 * psi2 * dt * h * h;
            for (int i = 0; i < nx; ++i) {
                const double x = center.x - radius + (i + 0.5) * h;
                const double dx = x - center.x;
                if (std::abs(dx) > slice_r) continue;
                for (int j = 0; j < nx; ++j) {
                    const double y = center.y - radius + (j + 0.5) * h;
                    const double dy = y - center.y;
                    if (dx * dx + dy * dy > rt) continue;
                    cplx u{0.0, 0.0};
                    for (std::size_t k = 0; k < tiles->size(); ++k) {
                        const double scale = std::sqrt((*tiles)[k].R) / kTwoPi;
                        u += scale * f1[k][i] * f2[k][j];
                    }
                    const double contrib = std::norm(u) * wt;
                    total += contrib * weight(Vec3{x, y, t});
                }
            }
        }
        return total;
    }

    // 1D factor of the evolved packet along one axis (dim 0: x, 1: y)
    static cplx evolved_packet_axis_value(const Tile& tile, double mu_j, double st, double t,
                                          double coord, int dim) {
        const double w = tile.freq_side();
        const double theta = dim == 0 ? tile.theta.x : tile.theta.y;
        const double nu = dim == 0 ? tile.nu.x : tile.nu.y;
        constexpr int nq = 40;
        const double du = 2.0 * PouBump::support / nq;
        cplx acc{0.0, 0.0};
        for (int q = 0; q < nq; ++q) {
            const double u = -PouBump::support + (q + 0.5) * du;
            const double xi = theta + w * u;
            const double phase = (coord - nu - st * mu_j) * xi + t * xi * xi;
            acc += PouBump::value(u) * std::polar(1.0, phase);
        }
        return acc * (w * du);
    }
};

} // namespace

EquidistributionReport equidistribution_check(const std::vector<Tile>& packets,
                                              const CurveParams& curve, const Variety& plane_z,
                                              Vec3 ball_center, double ball_radius, double R,
                                              double delta2, double eps, int levels) {
    EquidistributionReport rep;
    if (packets.empty()) {
        rep.pass = true;  // vacuous
        return rep;
    }
    PacketSumScan scan{&packets, &curve, R, eps};
    const double h = std::sqrt(R) / 6.0;

    const double denom =
        scan.mass(ball_center, 2.0 * ball_radius, h, [](Vec3) { return 1.0; });
    for (int i = 1; i <= levels; ++i) {
        const double rho = R / std::ldexp(1.0, i);
        const double w = std::pow(rho, 0.5 + delta2);
        const double num = scan.mass(ball_center, ball_radius, h, [&](Vec3 z) {
            return variety_distance(plane_z, z) <= w ? 1.0 : 0.0;
        });
        rep.sweep.emplace_back(rho, denom > 0.0 ? num / denom : 0.0);
    }

    // least-squares slope of log(ratio) against log(R/rho)
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n = 0;
    for (const auto& [rho, ratio] : rep.sweep) {
        if (ratio <= 0.0) continue;
        const double x = std::log(R / rho), y = std::log(ratio);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n >= 2) {
        rep.fitted_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        double ss = 0.0;
        const double b = (sy - rep.fitted_exponent * sx) / n;
        for (const auto& [rho, ratio] : rep.sweep) {
            if (ratio <= 0.0) continue;
            const double e = std::log(ratio) - (rep.fitted_exponent * std::log(R / rho) + b);
            ss += e * e;
        }
        rep.residual = std::sqrt(ss / n);
    }
    rep.pass = n >= 2 && rep.fitted_exponent <= -0.4;
    return rep;
}

double packet_sum_norm2(const std::vector<Tile>& packets) {
    // Gram matrix via 1D overlap quadratures on the frequency side:
    // <phi_k, phi_l> = (2pi)^2 int phihat_k conj(phihat_l) dxi.
    const int nq = 192;
    double total = 0.0;
    for (std::size_t a = 0; a < packets.size(); ++a) {
        for (std::size_t b = 0; b < packets.size(); ++b) {
            const Tile &ta = packets[a], &tb = packets[b];
            const double wa = ta.freq_side(), wb = tb.freq_side();
            cplx prod{1.0, 0.0};
            bool overlap = true;
            for (int dim = 0; dim < 2 && overlap; ++dim) {
                const double ca = dim == 0 ? ta.theta.x : ta.theta.y;
                const double cb = dim == 0 ? tb.theta.x : tb.theta.y;
                const double na = dim == 0 ? ta.nu.x : ta.nu.y;
                const double nb = dim == 0 ? tb.nu.x : tb.nu.y;
                const double lo = std::max(ca - PouBump::support * wa, cb - PouBump::support * wb);
                const double hi = std::min(ca + PouBump::support * wa, cb + PouBump::support * wb);
                if (lo >= hi) {
                    overlap = false;
                    break;
                }
                cplx acc{0.0, 0.0};
                const double dxi = (hi - lo) / nq;
                for (int q = 0; q < nq; ++q) {
                    const double xi = lo + (q + 0.5) * dxi;
                    acc += PouBump::value((xi - ca) / wa) * PouBump::value((xi - cb) / wb) *
                           std::polar(1.0, (nb - na) * xi);
                }
                prod *= acc * dxi;
            }
            if (!overlap) continue;
            const double scale = std::sqrt(ta.R) / kTwoPi * std::sqrt(tb.R) / kTwoPi;
            total += (kTwoPi * kTwoPi * scale * prod).real();
        }
    }
    return total;
}

PacketMassReport packet_ball_mass_check(const std::vector<Tile>& packets,
                                        const CurveParams& curve, Vec3 z_center, double r,
                                        double R, double eps) {
    PacketMassReport rep;
    rep.lower = 0.5 * r;
    rep.upper = 20.0 * r;
    if (packets.empty()) {
        rep.vacuous = true;
        rep.pass = true;
        return rep;
    }
    const TimeCutoffs cut{R, eps};
    if (cut.psi2(z_center.t / R) < 1.0 - 1e-12)
        throw std::invalid_argument("packet_ball_mass_check: t0 must sit in the psi2 plateau");
    for (const Tile& tile : packets) {
        const Tube tb = tube_of(tile, 0.1);
        bool meets = false;
        for (int s = 0; s <= 256 && !meets; ++s) {
            const double t = tile.R * s / 256.0;
            const Vec2 x = tb.core_at(t);
            const Vec3 p{x.x, x.y, t};
            if ((p - z_center).norm() <= r + tb.halfwidth) meets = true;
        }
        if (!meets)
            throw std::invalid_argument("packet_ball_mass_check: a tube misses B(z, r)");
    }

    PacketSumScan scan{&packets, &curve, R, eps};
    const double h = std::sqrt(R) / 6.0;
    rep.mass = scan.mass(z_center, 10.0 * r, h, [](Vec3) { return 1.0; });
    rep.f_norm2 = packet_sum_norm2(packets);
    if (rep.f_norm2 <= 0.0) {
        rep.vacuous = true;
        rep.pass = true;
        return rep;
    }
    rep.ratio = rep.mass / rep.f_norm2;
    rep.pass = rep.ratio >= rep.lower && rep.ratio <= rep.upper;
    return rep;
}

} // namespace curvelab
