#include "curvelab/wavepacket.hpp"

#include <fftw3.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "curvelab/bump.hpp"
#include "curvelab/parallel.hpp"

namespace curvelab {

namespace {

constexpr double kBumpSupport = PouBump::support;  // 0.6 in cube-side units

// Parseval window normalization sqrt(R)/(2pi)^2; the unit-norm packet is
// 2pi times the window.
double window_scale(double R) { return std::sqrt(R) / (kTwoPi * kTwoPi); }
double packet_scale(double R) { return std::sqrt(R) / kTwoPi; }

std::mutex g_small_plan_mutex;

void run_small_fft(std::vector<cplx>& data, int n, int sign) {
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(g_small_plan_mutex);
        plan = fftw_plan_dft_2d(n, n, reinterpret_cast<fftw_complex*>(data.data()),
                                reinterpret_cast<fftw_complex*>(data.data()), sign,
                                FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(g_small_plan_mutex);
        fftw_destroy_plan(plan);
    }
}

// Grid bin range whose frequencies hit the 1D bump support around center c.
std::pair<int, int> support_bins(const GridSpec& g, double c, double w) {
    const double dxi = g.freq_spacing();
    int lo = static_cast<int>(std::ceil((c - kBumpSupport * w) / dxi));
    int hi = static_cast<int>(std::floor((c + kBumpSupport * w) / dxi));
    const int half = g.points_per_side / 2;
    lo = std::max(lo, -half);
    hi = std::min(hi, half - 1);
    return {lo, hi};
}

int bin_index(const GridSpec& g, int k) { return k >= 0 ? k : k + g.points_per_side; }

} // namespace

GridSpec packet_grid(double R, double xi_max) {
    const double L = 64.0 * std::sqrt(R);
    int N = 32;
    while (kPi * N / L < xi_max) N *= 2;
    return GridSpec(L, N);
}

TileLattice build_tile_lattice(double R, const FrequencySupport& support, double box_side) {
    if (R < 4.0) throw std::domain_error("build_tile_lattice: R must be >= 4");
    const double w = 1.0 / std::sqrt(R);
    const double nu_spacing = std::sqrt(R);
    const double ratio = box_side / nu_spacing;
    const int per_side = static_cast<int>(std::llround(ratio));
    if (std::abs(ratio - per_side) > 1e-9 || per_side < 1)
        throw std::out_of_range("build_tile_lattice: box side must be a multiple of sqrt(R)");

    TileLattice lat;
    lat.R = R;
    lat.box_side = box_side;
    lat.support = support;
    lat.nu_per_side = per_side;

    // Every theta whose window can overlap the support keeps the partition
    // of unity (and hence the frame identity) exact for supported data.
    const double pad = kBumpSupport * w * std::sqrt(2.0);
    double rmin = 0.0, rmax = 0.0;
    Vec2 center{0.0, 0.0};
    switch (support.kind) {
        case FrequencySupport::Kind::ball:
            center = support.center;
            rmax = support.radius + pad;
            break;
        case FrequencySupport::Kind::annulus:
            rmin = std::max(0.0, std::ldexp(0.5, support.annulus_k) - pad);
            rmax = std::ldexp(2.0, support.annulus_k) + pad;
            break;
        default:
            rmax = 1.0 + pad;
            break;
    }
    const int span = static_cast<int>(std::floor(rmax / w)) + 1;
    const int ci = static_cast<int>(std::llround(center.x / w));
    const int cj = static_cast<int>(std::llround(center.y / w));
    for (int i = ci - span; i <= ci + span; ++i) {
        for (int j = cj - span; j <= cj + span; ++j) {
            Vec2 c{w * i, w * j};
            const double d = (c - center).norm();
            if (d > rmax) continue;
            if (support.kind == FrequencySupport::Kind::annulus && d < rmin) continue;
            lat.thetas.push_back(c);
        }
    }

    for (int j = -per_side / 2; j < per_side - per_side / 2; ++j)
        for (int i = -per_side / 2; i < per_side - per_side / 2; ++i)
            lat.nus.push_back(Vec2{nu_spacing * i, nu_spacing * j});
    return lat;
}

SampledField packet_function(const Tile& tile, const GridSpec& grid) {
    const GridSpec& g = grid;
    const double w = tile.freq_side();
    if (g.freq_spacing() > w)
        throw std::out_of_range("packet_function: frequency resolution below 1/sqrt(R)");
    if (tile.theta.norm() + kBumpSupport * w * std::sqrt(2.0) > g.nyquist())
        throw std::out_of_range("packet_function: tile frequency cube exceeds grid range");
    SampledField F(g, Side::frequency);
    const auto [lo1, hi1] = support_bins(g, tile.theta.x, w);
    const auto [lo2, hi2] = support_bins(g, tile.theta.y, w);
    const double scale = packet_scale(tile.R);
    for (int k1 = lo1; k1 <= hi1; ++k1) {
        const double b1 = PouBump::value((g.freq_spacing() * k1 - tile.theta.x) / w);
        for (int k2 = lo2; k2 <= hi2; ++k2) {
            const double b2 = PouBump::value((g.freq_spacing() * k2 - tile.theta.y) / w);
            const Vec2 xi{g.freq_spacing() * k1, g.freq_spacing() * k2};
            F.at(bin_index(g, k1), bin_index(g, k2)) =
                scale * b1 * b2 * std::polar(1.0, -tile.nu.dot(xi));
        }
    }
    const double norm = F.l2_norm();
    if (norm > 0.0)
        for (cplx& v : F.values()) v /= norm;
    F.declare_support(
        FrequencySupport::ball_at(tile.theta, kBumpSupport * w * std::sqrt(2.0) + 1e-12));
    return F;
}

double Decomposition::coefficient_energy() const {
    double s = 0.0;
    for (const auto& c : coeffs) s += std::norm(c.value);
    return s;
}

namespace {

// Shared worker for the plain and recentered analysis: coefficients of
// fhat (already demodulated when recentering) against the window family.
Decomposition analyze(const SampledField& fhat, const TileLattice& lat) {
    const GridSpec& g = fhat.grid();
    const int nv = lat.nu_per_side;
    const double w = 1.0 / std::sqrt(lat.R);
    const double cs = window_scale(lat.R);
    const double dxi = g.freq_spacing();
    const double prune = 1e-9 * fhat.l2_norm();

    Decomposition out;
    out.lattice = &lat;
    std::mutex out_mutex;
    parallel_for(static_cast<std::int64_t>(lat.thetas.size()), [&](std::int64_t it) {
        const Vec2 theta = lat.thetas[it];
        const auto [lo1, hi1] = support_bins(g, theta.x, w);
        const auto [lo2, hi2] = support_bins(g, theta.y, w);
        if (lo1 > hi1 || lo2 > hi2) return;
        // Fold the windowed spectrum onto the nu-resolution torus; the
        // backward DFT then evaluates every <f, w_{theta,nu}> at once.
        std::vector<cplx> buf(std::size_t(nv) * nv, cplx{0.0, 0.0});
        for (int k1 = lo1; k1 <= hi1; ++k1) {
            const double b1 = PouBump::value((dxi * k1 - theta.x) / w);
            const int m1 = ((k1 % nv) + nv) % nv;
            for (int k2 = lo2; k2 <= hi2; ++k2) {
                const double b2 = PouBump::value((dxi * k2 - theta.y) / w);
                const int m2 = ((k2 % nv) + nv) % nv;
                buf[std::size_t(m1) * nv + m2] +=
                    fhat.at(bin_index(g, k1), bin_index(g, k2)) * (cs * b1 * b2);
            }
        }
        run_small_fft(buf, nv, FFTW_BACKWARD);
        const double scale = kTwoPi * kTwoPi * dxi * dxi;
        std::vector<PacketCoefficient> local;
        for (std::size_t in = 0; in < lat.nus.size(); ++in) {
            const int j1 = static_cast<int>(in) % nv - nv / 2;
            const int j2 = static_cast<int>(in) / nv - nv / 2;
            const int m1 = ((j1 % nv) + nv) % nv;
            const int m2 = ((j2 % nv) + nv) % nv;
            // nu index (i,j) -> lattice order (row-major over j2, j1)
            const cplx a = buf[std::size_t(m1) * nv + m2] * scale;
            if (std::abs(a) > prune)
                local.push_back(PacketCoefficient{static_cast<std::uint32_t>(it),
                                                  static_cast<std::uint32_t>(in), a});
        }
        std::lock_guard<std::mutex> lock(out_mutex);
        out.coeffs.insert(out.coeffs.end(), local.begin(), local.end());
    });
    std::sort(out.coeffs.begin(), out.coeffs.end(), [](const auto& a, const auto& b) {
        return a.i_theta != b.i_theta ? a.i_theta < b.i_theta : a.i_nu < b.i_nu;
    });
    return out;
}

SampledField synthesize(const TileLattice& lat, const std::vector<PacketCoefficient>& coeffs,
                        const GridSpec& g) {
    const int nv = lat.nu_per_side;
    const double w = 1.0 / std::sqrt(lat.R);
    const double cs = window_scale(lat.R);
    const double dxi = g.freq_spacing();

    // Coefficients grouped by theta.
    std::vector<std::vector<PacketCoefficient>> by_theta(lat.thetas.size());
    for (const auto& c : coeffs) by_theta[c.i_theta].push_back(c);

    SampledField F(g, Side::frequency);
    std::mutex acc_mutex;
    parallel_for(static_cast<std::int64_t>(lat.thetas.size()), [&](std::int64_t it) {
        if (by_theta[it].empty()) return;
        const Vec2 theta = lat.thetas[it];
        std::vector<cplx> buf(std::size_t(nv) * nv, cplx{0.0, 0.0});
        for (const auto& c : by_theta[it]) {
            const int j1 = static_cast<int>(c.i_nu) % nv - nv / 2;
            const int j2 = static_cast<int>(c.i_nu) / nv - nv / 2;
            const int m1 = ((j1 % nv) + nv) % nv;
            const int m2 = ((j2 % nv) + nv) % nv;
            buf[std::size_t(m1) * nv + m2] += c.value;
        }
        run_small_fft(buf, nv, FFTW_FORWARD);
        const auto [lo1, hi1] = support_bins(g, theta.x, w);
        const auto [lo2, hi2] = support_bins(g, theta.y, w);
        std::lock_guard<std::mutex> lock(acc_mutex);
        for (int k1 = lo1; k1 <= hi1; ++k1) {
            const double b1 = PouBump::value((dxi * k1 - theta.x) / w);
            const int m1 = ((k1 % nv) + nv) % nv;
            for (int k2 = lo2; k2 <= hi2; ++k2) {
                const double b2 = PouBump::value((dxi * k2 - theta.y) / w);
                const int m2 = ((k2 % nv) + nv) % nv;
                F.at(bin_index(g, k1), bin_index(g, k2)) +=
                    buf[std::size_t(m1) * nv + m2] * (cs * b1 * b2);
            }
        }
    });
    return F;
}

} // namespace

namespace {
void check_grid_against_lattice(const GridSpec& g, const TileLattice& lat) {
    if (std::abs(g.side_length - lat.box_side) > 1e-9 * lat.box_side)
        throw std::invalid_argument("wavepacket: field grid does not match lattice box");
    if (g.freq_spacing() > 1.0 / std::sqrt(lat.R))
        throw std::out_of_range("wavepacket: frequency resolution below 1/sqrt(R)");
}
} // namespace

Decomposition decompose(const SampledField& f, const TileLattice& lat) {
    const SampledField F = f.side() == Side::frequency ? f : forward_transform(f);
    check_grid_against_lattice(F.grid(), lat);
    if (F.support() &&
        F.support()->max_abs_freq() > lat.support.max_abs_freq() + 0.5 / std::sqrt(lat.R))
        throw std::invalid_argument("decompose: field support exceeds lattice support");
    Decomposition d = analyze(F, lat);
    d.grid = F.grid();
    return d;
}

SampledField reconstruct(const TileLattice& lat, const std::vector<PacketCoefficient>& coeffs,
                         const GridSpec& grid) {
    check_grid_against_lattice(grid, lat);
    return synthesize(lat, coeffs, grid);
}

Tube tube_of(const Tile& tile, double delta) {
    if (!(delta > 0.0 && delta <= 0.2)) throw std::domain_error("tube_of: delta in (0, 0.2]");
    Tube t;
    t.tile = tile;
    t.delta = delta;
    t.halfwidth = std::pow(tile.R, 0.5 + delta);
    return t;
}

// ---------------------------------------------------------------------------
// Separable direct evaluation of evolved packets. The evolved packet is a
// product of two 1D oscillatory integrals over the compact bump support, so
// space-time scans never touch a 2D transform (and see no periodization).
// ---------------------------------------------------------------------------
namespace {

constexpr int kQuadNodes = 40;

struct Factor1D {
    // integral over u of phihat(u) exp(i((x - shift)(theta + w u) + chirp
    // (theta + w u)^2)) w du, evaluated for a batch of x.
    double theta, w, shift, chirp;
    cplx eval(double x) const {
        cplx acc{0.0, 0.0};
        const double du = 2.0 * kBumpSupport / kQuadNodes;
        for (int q = 0; q < kQuadNodes; ++q) {
            const double u = -kBumpSupport + (q + 0.5) * du;
            const double xi = theta + w * u;
            const double phase = (x - shift) * xi + chirp * xi * xi;
            acc += PouBump::value(u) * std::polar(1.0, phase);
        }
        return acc * (w * du);
    }
};

Factor1D make_factor(double theta, double w, double nu_c, double mu_j, double drift,
                     double chirp) {
    return Factor1D{theta, w, nu_c + drift * mu_j, chirp};
}

} // namespace

cplx evolved_packet_value(const Tile& tile, const CurveParams& curve, Vec2 x, double t) {
    const double w = tile.freq_side();
    const double st = std::sqrt(t);
    Factor1D f1 = make_factor(tile.theta.x, w, tile.nu.x, curve.mu.x, st, t);
    Factor1D f2 = make_factor(tile.theta.y, w, tile.nu.y, curve.mu.y, st, t);
    return packet_scale(tile.R) * f1.eval(x.x) * f2.eval(x.y);
}

TubeMassReport tube_mass_fraction(const Tile& tile, const CurveParams& curve, double delta,
                                  double eps, int time_samples) {
    const Tube tube = tube_of(tile, delta);
    const double R = tile.R;
    const double sR = std::sqrt(R);
    const double w = tile.freq_side();
    const TimeCutoffs cut{R, eps};

    const double hx = sR / 8.0;
    const double margin = 14.0 * sR + tube.halfwidth;
    const double dt = R / time_samples;
    const double scale = packet_scale(R);

    const int threads = default_thread_count();
    struct Partial {
        double inside = 0.0, inside2 = 0.0, inside6 = 0.0, total = 0.0, sup_out = 0.0;
    };
    std::vector<Partial> parts(threads);
    const std::int64_t chunk = (time_samples + threads - 1) / threads;
    std::vector<std::thread> pool;
    for (int tid = 0; tid < threads; ++tid) {
        const std::int64_t lo = tid * chunk, hi = std::min<std::int64_t>(time_samples, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, tid, lo, hi] {
            Partial& acc = parts[tid];
            std::vector<cplx> f1v, f2v;
            for (std::int64_t q = lo; q < hi; ++q) {
                const double t = (q + 0.5) * dt;
                const double psi2 = cut.psi2(t / R);
                if (psi2 == 0.0) continue;
                const double wt = psi2 * psi2 * dt * hx * hx;
                const Vec2 core = tube.core_at(t);
                const double st = std::sqrt(t);
                Factor1D f1 = make_factor(tile.theta.x, w, tile.nu.x, curve.mu.x, st, t);
                Factor1D f2 = make_factor(tile.theta.y, w, tile.nu.y, curve.mu.y, st, t);
                // window on the global hx-lattice around the slice center
                const Vec2 center{core.x + st * curve.mu.x, core.y + st * curve.mu.y};
                const int i0 = static_cast<int>(std::floor((center.x - margin) / hx));
                const int i1 = static_cast<int>(std::ceil((center.x + margin) / hx));
                const int j0 = static_cast<int>(std::floor((center.y - margin) / hx));
                const int j1 = static_cast<int>(std::ceil((center.y + margin) / hx));
                f1v.resize(i1 - i0 + 1);
                f2v.resize(j1 - j0 + 1);
                for (int i = i0; i <= i1; ++i) f1v[i - i0] = f1.eval(i * hx);
                for (int j = j0; j <= j1; ++j) f2v[j - j0] = f2.eval(j * hx);
                const double hw2 = tube.halfwidth * tube.halfwidth;
                for (int i = i0; i <= i1; ++i) {
                    const double dx = i * hx - core.x;
                    const double a1 = std::abs(f1v[i - i0]);
                    for (int j = j0; j <= j1; ++j) {
                        const double dy = j * hx - core.y;
                        const double amp = scale * a1 * std::abs(f2v[j - j0]);
                        const double m = amp * amp * wt;
                        acc.total += m;
                        const double d2 = dx * dx + dy * dy;
                        if (d2 <= hw2) acc.inside += m;
                        if (d2 <= 4.0 * hw2)
                            acc.inside2 += m;
                        else
                            acc.sup_out = std::max(acc.sup_out, amp);
                        if (d2 <= 36.0 * hw2) acc.inside6 += m;
                    }
                }
            }
        });
    }
    for (auto& th : pool) th.join();

    TubeMassReport rep;
    for (const auto& p : parts) {
        rep.fraction += p.inside;
        rep.fraction_dilated2 += p.inside2;
        rep.fraction_dilated6 += p.inside6;
        rep.total_mass += p.total;
        rep.sup_outside = std::max(rep.sup_outside, p.sup_out);
    }
    if (rep.total_mass > 0.0) {
        rep.fraction /= rep.total_mass;
        rep.fraction_dilated2 /= rep.total_mass;
        rep.fraction_dilated6 /= rep.total_mass;
    }
    rep.sup_bound = 1.0 / sR;
    return rep;
}

cplx RecenteredBasis::modulation(Vec2 xi) const {
    const Vec2 x0 = center.spatial();
    const double phase = -x0.dot(xi) + std::sqrt(center.t) * curve.mu.dot(xi) -
                         center.t * xi.norm2();
    return std::polar(1.0, phase);
}

RecenteredBasis recenter_packets(Vec3 center, double rho, const CurveParams& curve,
                                 double box_side, const FrequencySupport& support) {
    if (center.t < 0.0) throw std::domain_error("recenter_packets: t0 must be nonnegative");
    RecenteredBasis basis;
    basis.center = center;
    basis.rho = rho;
    basis.curve = curve;
    basis.lattice = build_tile_lattice(rho, support, box_side);
    return basis;
}

Decomposition decompose_recentered(const SampledField& f, const RecenteredBasis& basis) {
    SampledField F = f.side() == Side::frequency ? f : forward_transform(f);
    const GridSpec g = F.grid();
    check_grid_against_lattice(g, basis.lattice);
    // <f, M w> = <conj(M) fhat, what>: demodulate once, then run the plain
    // analysis at scale rho.
    const int n = g.points_per_side;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            F.at(i, j) *= std::conj(basis.modulation(Vec2{g.freq(i), g.freq(j)}));
    Decomposition d = analyze(F, basis.lattice);
    d.grid = g;
    return d;
}

SampledField reconstruct_recentered(const RecenteredBasis& basis,
                                    const std::vector<PacketCoefficient>& coeffs,
                                    const GridSpec& grid) {
    check_grid_against_lattice(grid, basis.lattice);
    SampledField F = synthesize(basis.lattice, coeffs, grid);
    const GridSpec& g = grid;
    const int n = g.points_per_side;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            F.at(i, j) *= basis.modulation(Vec2{g.freq(i), g.freq(j)});
    return F;
}

cplx evolved_recentered_packet_value(const RecenteredBasis& basis, const Tile& tile, Vec2 x,
                                     double t) {
    const double w = tile.freq_side();
    const double drift = std::sqrt(t) - std::sqrt(basis.center.t);
    const double chirp = t - basis.center.t;
    const Vec2 xr = x - basis.center.spatial();
    Factor1D f1 = make_factor(tile.theta.x, w, tile.nu.x, basis.curve.mu.x, drift, chirp);
    Factor1D f2 = make_factor(tile.theta.y, w, tile.nu.y, basis.curve.mu.y, drift, chirp);
    return packet_scale(tile.R) * f1.eval(xr.x) * f2.eval(xr.y);
}

bool packet_compatibility(const Tile& parent, const Tile& child, Vec3 center, double delta) {
    if (child.R > parent.R + 1e-12)
        throw std::domain_error("packet_compatibility: child scale must satisfy rho <= R");
    const double rho_inv_half = 1.0 / std::sqrt(child.R);
    const Vec2 x0 = center.spatial();
    const double t0 = center.t;
    const bool freq_ok = (parent.theta - child.theta).norm() <= 2.0 * rho_inv_half;
    const Vec2 shift = parent.nu - child.nu - x0 - parent.theta * (2.0 * t0);
    const bool phys_ok = shift.norm() <= std::pow(parent.R, 0.5 + delta);
    return freq_ok && phys_ok;
}

} // namespace curvelab
