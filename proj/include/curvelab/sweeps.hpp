#pragma once

// End-to-end experiments: maximal-estimate ratios, the necessity sweep of
// the bump family, and the rescaling-chain identity checks.

#include <vector>

#include "curvelab/propagator.hpp"

namespace curvelab {

struct ExponentFit {
    std::vector<std::pair<double, double>> samples;  // (log scale, log ratio)
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // RMS of the least-squares fit
};

ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& scale_ratio_pairs);

// || max_t |e^{itH} f| ||_{L^p(B(0,1))} / ||f||_{H^s}
double maximal_ratio(const SampledField& f, const TimeWindow& window, double p, double s,
                     const CurveParams& curve);

struct Remark1Sweep {
    std::vector<double> lambdas;
    std::vector<double> ratios;
    ExponentFit fit;
    double predicted_slope = 0.0;  // 1 - 1/(2p) - 1/2 - s
};

// Growth exponent of the maximal ratio over the bump family; for s = 0,
// p = 16/5 the predicted slope is 11/32.
Remark1Sweep remark1_sweep(const std::vector<double>& lambdas, double p, double s,
                           const CurveParams& curve, int time_per_block = 64);

// Grid sized for the datum at scale lambda: frequency range covers the bump
// around lambda*mu, box holds B(0,1) with padding.
GridSpec remark1_grid(double lambda);

struct ReductionChainReport {
    double rescale_identity_err = 0.0;  // worst relative error at matched points
    double norm_identity_err = 0.0;     // | ||g|| - R^{-1} ||g1|| | / ||g||
    double summability_threshold = 0.0; // s* = 1 - 2/p + 2 eps
    bool series_converges = false;      // for the queried s
    bool pass = false;
};

ReductionChainReport reduction_chain_check(const SampledField& g, double R, double p, double s,
                                           double eps, const CurveParams& curve,
                                           std::uint64_t seed, int matched_points = 20);

// Descriptive maximal sweep over R for a data family; no pass/fail gate.
struct MaximalSweepRow {
    double R = 0.0;
    double ratio = 0.0;
};
struct MaximalSweepReport {
    double p = 0.0;
    std::vector<MaximalSweepRow> rows;
    ExponentFit fit;
    double reference_exponent = 0.0;  // 2/p - 5/8
};

MaximalSweepReport maximal_sweep(const std::vector<double>& R_list, double p,
                                 const CurveParams& curve, std::uint64_t seed);

} // namespace curvelab
