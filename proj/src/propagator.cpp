#include "curvelab/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "curvelab/bump.hpp"
#include "curvelab/parallel.hpp"

namespace curvelab {

Vec2 curve_position(Vec2 x, double t, const CurveParams& curve) {
    if (t < 0.0) throw std::domain_error("curve_position: t must be nonnegative");
    return x - curve.mu * std::sqrt(t);
}

TimeWindow::TimeWindow(double lo, double hi, int count, bool geom)
    : t_min(lo), t_max(hi), samples(count), geometric(geom) {
    if (!(lo >= 0.0 && lo < hi)) throw std::invalid_argument("TimeWindow: need 0 <= t_min < t_max");
    if (count < 2) throw std::invalid_argument("TimeWindow: need >= 2 samples");
    if (geom && !(lo > 0.0))
        throw std::invalid_argument("TimeWindow: geometric spacing needs t_min > 0");
}

TimeWindow TimeWindow::dyadic(double t_min, double t_max, int per_block) {
    const double blocks = std::log2(t_max / t_min);
    const int count = std::max(2, static_cast<int>(std::ceil(blocks * per_block)));
    return TimeWindow(t_min, t_max, count, true);
}

std::vector<double> TimeWindow::nodes() const {
    std::vector<double> ts(samples);
    if (geometric) {
        const double ratio = std::log(t_max / t_min);
        for (int i = 0; i < samples; ++i)
            ts[i] = t_min * std::exp(ratio * (double(i + 1) / samples));
        ts.back() = t_max;
    } else {
        for (int i = 0; i < samples; ++i)
            ts[i] = t_min + (t_max - t_min) * (double(i + 1) / samples);
    }
    return ts;
}

TimeWindow TimeWindow::refined() const {
    return TimeWindow(t_min, t_max, 2 * samples, geometric);
}

double TimeCutoffs::psi1(double u) const {
    const double edge = plateau_edge(), w = transition();
    if (u <= edge) return u >= 0.0 ? 1.0 : 0.0;
    return 1.0 - smoothstep5((u - edge) / w);
}

double TimeCutoffs::psi2(double u) const {
    const double edge = plateau_edge(), w = transition();
    if (u < edge - w) return 0.0;
    if (u < edge) return smoothstep5((u - (edge - w)) / w);
    if (u <= 1.0) return 1.0;
    return 1.0 - smoothstep5((u - 1.0) / w);
}

SampledField evolve(const SampledField& f, double t, const CurveParams& curve) {
    if (t < 0.0) throw std::domain_error("evolve: t must be nonnegative");
    const SampledField F = f.side() == Side::frequency ? f : forward_transform(f);
    if (F.support() && F.support()->max_abs_freq() > F.grid().nyquist())
        throw std::out_of_range("evolve: declared support exceeds grid range");
    const int n = F.n();
    const double st = std::sqrt(t);
    SampledField phased(F.grid(), Side::frequency);
    for (int i = 0; i < n; ++i) {
        const double xi1 = F.grid().freq(i);
        for (int j = 0; j < n; ++j) {
            const double xi2 = F.grid().freq(j);
            const double phase = -st * (curve.mu.x * xi1 + curve.mu.y * xi2) +
                                 t * (xi1 * xi1 + xi2 * xi2);
            phased.at(i, j) = std::polar(1.0, phase) * F.at(i, j);
        }
    }
    SampledField out = inverse_transform(phased);
    if (f.support()) out.declare_support(*f.support());
    return out;
}

cplx evolve_at(const SampledField& f, Vec2 x, double t, const CurveParams& curve) {
    if (t < 0.0) throw std::domain_error("evolve_at: t must be nonnegative");
    const SampledField F = f.side() == Side::frequency ? f : forward_transform(f);
    const int n = F.n();
    const double st = std::sqrt(t);
    const double dxi = F.grid().freq_spacing();
    cplx acc{0.0, 0.0};
    for (int i = 0; i < n; ++i) {
        const double xi1 = F.grid().freq(i);
        for (int j = 0; j < n; ++j) {
            const cplx v = F.at(i, j);
            if (v == cplx{0.0, 0.0}) continue;
            const double xi2 = F.grid().freq(j);
            const double phase = x.x * xi1 + x.y * xi2 -
                                 st * (curve.mu.x * xi1 + curve.mu.y * xi2) +
                                 t * (xi1 * xi1 + xi2 * xi2);
            acc += std::polar(1.0, phase) * v;
        }
    }
    return acc * (dxi * dxi);
}

SampledField maximal_function(const SampledField& f, const TimeWindow& window,
                              const CurveParams& curve) {
    if (window.samples < 16)
        throw std::invalid_argument("maximal_function: window needs >= 16 samples");
    const SampledField F = f.side() == Side::frequency ? f : forward_transform(f);
    const std::vector<double> ts = window.nodes();
    const std::int64_t m = F.grid().sample_count();

    // Associative max-reduce over per-time evolutions; slice order cannot
    // change the result.
    std::vector<double> best(m, 0.0);
    const int threads = default_thread_count();
    const std::int64_t count = static_cast<std::int64_t>(ts.size());
    const std::int64_t chunk = (count + threads - 1) / threads;
    std::vector<std::vector<double>> partial(threads, std::vector<double>(m, 0.0));
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
        const std::int64_t lo = t * chunk, hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, t, lo, hi] {
            auto& acc = partial[t];
            for (std::int64_t k = lo; k < hi; ++k) {
                SampledField u = evolve(F, ts[k], curve);
                for (std::int64_t i = 0; i < m; ++i)
                    acc[i] = std::max(acc[i], std::abs(u.values()[i]));
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& acc : partial)
        for (std::int64_t i = 0; i < m; ++i) best[i] = std::max(best[i], acc[i]);

    SampledField out(F.grid(), Side::physical);
    for (std::int64_t i = 0; i < m; ++i) out.values()[i] = best[i];
    return out;
}

BaseBoundReport base_bound_check(const SampledField& f, const TimeWindow& window,
                                 const CurveParams& curve) {
    if (!f.support() || f.support()->kind != FrequencySupport::Kind::ball)
        throw std::invalid_argument("base_bound_check: field must declare a ball support");
    const double Minv = f.support()->radius;
    if (Minv > 1.0 + 1e-12)
        throw std::invalid_argument("base_bound_check: ball radius must be M^{-1} with M >= 1");
    if (Minv < 4.0 * f.grid().freq_spacing())
        throw std::invalid_argument("base_bound_check: grid does not resolve the ball");
    const double l2 = f.spectral_l2_norm();
    BaseBoundReport rep;
    rep.rhs = std::sqrt(kPi) * Minv * l2;
    {
        const SampledField F = f.side() == Side::frequency ? f : forward_transform(f);
        const double dxi = F.grid().freq_spacing();
        double l1 = 0.0;
        for (const cplx& v : F.values()) l1 += std::abs(v);
        rep.l1_bound = l1 * dxi * dxi;
    }
    if (l2 == 0.0) {
        rep.lhs = 0.0;
        rep.ratio = 0.0;
        rep.pass = true;
        return rep;
    }
    double sup = 0.0;
    for (double t : window.nodes()) {
        SampledField u = evolve(f, t, curve);
        for (const cplx& v : u.values()) sup = std::max(sup, std::abs(v));
    }
    // include t = 0 (the sup is over (0, R] but the limit exists)
    {
        SampledField u = evolve(f, window.t_min, curve);
        for (const cplx& v : u.values()) sup = std::max(sup, std::abs(v));
    }
    rep.lhs = sup;
    rep.ratio = sup / (Minv * l2);
    rep.pass = rep.ratio <= std::sqrt(kPi) * (1.0 + 1e-9);
    return rep;
}

SampledField parabolic_rescale(const SampledField& g, double R) {
    if (R < 1.0) throw std::domain_error("parabolic_rescale: R must be >= 1");
    const SampledField G = g.side() == Side::frequency ? g : forward_transform(g);
    if (G.support() && R * G.support()->max_abs_freq() > R * G.grid().nyquist())
        throw std::out_of_range("parabolic_rescale: rescaled support escapes grid");
    // Same bins, grid shrunk by R: node k of the new grid sits at eta = R xi,
    // so ghat1(eta) = ghat(eta / R) is a straight copy of the samples.
    GridSpec shrunk(G.grid().side_length / R, G.n());
    SampledField out(shrunk, Side::frequency, G.values());
    if (G.support()) {
        FrequencySupport s = *G.support();
        if (s.kind == FrequencySupport::Kind::ball) {
            s.center = s.center * R;
            s.radius *= R;
        }
        out.declare_support(s);
    }
    return out;
}

double remark1_bump(double u) { return PouBump::value(u); }

SampledField remark1_datum(const GridSpec& g, double lambda, const CurveParams& curve) {
    if (lambda < 4.0) throw std::domain_error("remark1_datum: lambda must be >= 4");
    const double sl = std::sqrt(lambda);
    if (lambda + PouBump::support * sl > g.nyquist())
        throw std::out_of_range("remark1_datum: lambda out of grid range");
    SampledField F(g, Side::frequency);
    const int n = g.points_per_side;
    const Vec2 c = curve.mu * lambda;
    for (int i = 0; i < n; ++i) {
        const double u1 = (g.freq(i) - c.x) / sl;
        if (std::abs(u1) >= PouBump::support) continue;
        for (int j = 0; j < n; ++j) {
            const double u2 = (g.freq(j) - c.y) / sl;
            if (std::abs(u2) >= PouBump::support) continue;
            F.at(i, j) = remark1_bump(u1) * remark1_bump(u2);
        }
    }
    F.declare_support(FrequencySupport::ball_at(c, PouBump::support * sl * std::sqrt(2.0)));
    return F;
}

} // namespace curvelab
