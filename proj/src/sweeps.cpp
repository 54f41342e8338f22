#include "curvelab/sweeps.hpp"

#include <cmath>
#include <random>

#include "curvelab/bump.hpp"

namespace curvelab {

ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& pairs) {
    ExponentFit fit;
    fit.samples = pairs;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const int n = static_cast<int>(pairs.size());
    for (const auto& [x, y] : pairs) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    if (n >= 2 && n * sxx - sx * sx > 0.0) {
        fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        fit.intercept = (sy - fit.slope * sx) / n;
        double ss = 0.0;
        for (const auto& [x, y] : pairs) {
            const double e = y - (fit.slope * x + fit.intercept);
            ss += e * e;
        }
        fit.residual = std::sqrt(ss / n);
    }
    return fit;
}

double maximal_ratio(const SampledField& f, const TimeWindow& window, double p, double s,
                     const CurveParams& curve) {
    const double denom = sobolev_norm(f, s);
    if (denom <= 0.0) throw std::invalid_argument("maximal_ratio: zero H^s norm");
    SampledField m = maximal_function(f, window, curve);
    return lp_norm_on_region(m, p, BallRegion{{0.0, 0.0}, 1.0}) / denom;
}

GridSpec remark1_grid(double lambda) {
    const double xi_max = lambda + PouBump::support * std::sqrt(lambda) * std::sqrt(2.0) + 2.0;
    const double l_min = 5.0;  // holds B(0,1) with ample padding
    int N = 32;
    while (kPi * N / xi_max < l_min) {
        N *= 2;
        if (N > 4096) throw std::out_of_range("remark1_grid: lambda out of desk-scale range");
    }
    return GridSpec(kPi * N / xi_max, N);
}

Remark1Sweep remark1_sweep(const std::vector<double>& lambdas, double p, double s,
                           const CurveParams& curve, int time_per_block) {
    if (lambdas.size() < 2)
        throw std::invalid_argument("remark1_sweep: need at least two lambda values");
    Remark1Sweep sweep;
    sweep.lambdas = lambdas;
    sweep.predicted_slope = 1.0 - 1.0 / (2.0 * p) - 0.5 - s;
    std::vector<std::pair<double, double>> pts;
    for (double lambda : lambdas) {
        const GridSpec g = remark1_grid(lambda);
        SampledField f = remark1_datum(g, lambda, curve);
        // the sup needs times down to the turning scale 1/(16 lambda^2)
        TimeWindow window = TimeWindow::dyadic(0.05 / (lambda * lambda), 1.0, time_per_block);
        const double ratio = maximal_ratio(f, window, p, s, curve);
        sweep.ratios.push_back(ratio);
        pts.emplace_back(std::log(lambda), std::log(ratio));
    }
    sweep.fit = fit_exponent(pts);
    return sweep;
}

ReductionChainReport reduction_chain_check(const SampledField& g, double R, double p, double s,
                                           double eps, const CurveParams& curve,
                                           std::uint64_t seed, int matched_points) {
    if (!g.support() || g.support()->kind != FrequencySupport::Kind::annulus ||
        g.support()->annulus_k != 1)
        throw std::invalid_argument("reduction_chain_check: g must be supported in A(2)");
    ReductionChainReport rep;

    SampledField g1 = parabolic_rescale(g, R);
    rep.norm_identity_err = std::abs(g.l2_norm() - g1.l2_norm() / R) / g.l2_norm();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(-1.0, 1.0), ut(0.05, 1.0);
    double worst = 0.0;
    for (int i = 0; i < matched_points; ++i) {
        const Vec2 x{2.0 * ux(rng), 2.0 * ux(rng)};
        const double t = ut(rng);
        const Vec2 y = x * (1.0 / R);
        const double sr = t / (R * R);
        const cplx lhs = evolve_at(g, x, t, curve);
        const cplx rhs = evolve_at(g1, y, sr, curve) / (R * R);
        const double scale = std::max(std::abs(lhs), std::abs(rhs));
        if (scale > 0.0) worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    rep.rescale_identity_err = worst;

    rep.summability_threshold = 1.0 - 2.0 / p + 2.0 * eps;
    rep.series_converges = s > rep.summability_threshold;
    rep.pass = rep.rescale_identity_err <= 1e-6 && rep.norm_identity_err <= 1e-10;
    return rep;
}

MaximalSweepReport maximal_sweep(const std::vector<double>& R_list, double p,
                                 const CurveParams& curve, std::uint64_t seed) {
    MaximalSweepReport rep;
    rep.p = p;
    rep.reference_exponent = 2.0 / p - 5.0 / 8.0;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < R_list.size(); ++i) {
        const double R = R_list[i];
        // box holds B(0,R); annulus-supported random data
        const double xi_max = 4.5;
        int N = 32;
        while (kPi * N / xi_max < 2.2 * R) N *= 2;
        GridSpec g(kPi * N / xi_max, N);
        SampledField f =
            random_bandlimited_field(g, FrequencySupport::annulus(1), seed + i);
        TimeWindow window = TimeWindow::dyadic(1.0 / R, R, 48);
        SampledField m = maximal_function(f, window, curve);
        const double ratio =
            lp_norm_on_region(m, p, BallRegion{{0.0, 0.0}, R}) / f.l2_norm();
        rep.rows.push_back({R, ratio});
        pts.emplace_back(std::log(R), std::log(ratio));
    }
    rep.fit = fit_exponent(pts);
    return rep;
}

} // namespace curvelab
