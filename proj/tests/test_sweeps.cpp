#include <doctest.h>

#include "curvelab/sweeps.hpp"
#include "test_oracles.hpp"

using namespace curvelab;

TEST_CASE("exponent fitting") {
    // exact synthetic line: slope and intercept recovered, zero residual
    std::vector<std::pair<double, double>> pts;
    for (double x : {0.0, 1.0, 2.0, 3.5}) pts.emplace_back(x, 0.75 * x - 2.0);
    ExponentFit fit = fit_exponent(pts);
    CHECK(fit.slope == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(fit.residual < 1e-12);
}

TEST_CASE("maximal ratio structure") {
    GridSpec g(8.0 * kPi, 64);  // unit frequencies on-grid
    const CurveParams curve;
    TimeWindow win = TimeWindow::dyadic(1e-3, 1.0, 16);

    SUBCASE("single-node data: s and p dependences match the closed form") {
        auto delta_at = [&](int k1, int k2) {
            SampledField F(g, Side::frequency);
            F.at(k1, k2) = 1.0;
            return F;
        };
        SampledField f1 = delta_at(4, 0);   // |xi| = 1
        SampledField f2 = delta_at(8, 0);   // |xi| = 2
        const double s = 1.0, p = 3.2;
        const double r1 = maximal_ratio(f1, win, p, s, curve);
        const double r2 = maximal_ratio(f2, win, p, s, curve);
        // ratio ~ (1+|xi|^2)^{-s/2}: quadrature factors cancel in the quotient
        CHECK(r1 / r2 ==
              doctest::Approx(std::pow(5.0 / 2.0, s / 2.0)).epsilon(1e-6));
        // p-dependence through |B(0,1)|^{1/p}
        const double q1 = maximal_ratio(f1, win, 2.0, 0.0, curve);
        const double q2 = maximal_ratio(f1, win, 4.0, 0.0, curve);
        CHECK(q1 / q2 == doctest::Approx(std::pow(kPi, 0.5 - 0.25)).epsilon(0.03));
    }
    SUBCASE("homogeneity: the ratio is exactly scale invariant") {
        SampledField f = oracle::random_field(g, 3, 2.0);
        SampledField f2 = f;
        for (auto& v : f2.values()) v *= 2.0;
        CHECK(maximal_ratio(f, win, 3.2, 0.5, curve) ==
              doctest::Approx(maximal_ratio(f2, win, 3.2, 0.5, curve)).epsilon(1e-12));
    }
    SUBCASE("zero field is rejected") {
        SampledField z(g, Side::frequency);
        CHECK_THROWS(maximal_ratio(z, win, 3.2, 0.0, curve));
    }
}

TEST_CASE("necessity sweep at small scale") {
    const CurveParams curve;
    Remark1Sweep sweep = remark1_sweep({16.0, 32.0, 64.0}, 3.2, 0.0, curve, 48);
    CHECK(sweep.predicted_slope == doctest::Approx(11.0 / 32.0));
    CHECK(std::abs(sweep.fit.slope - sweep.predicted_slope) <= 0.05);
    CHECK(sweep.fit.residual < 0.05);
    CHECK_THROWS(remark1_sweep({16.0}, 3.2, 0.0, curve));

    SUBCASE("slope is invariant under amplitude rescaling by homogeneity") {
        // remark1_sweep uses maximal_ratio, which is 0-homogeneous; the
        // scale-invariance is covered by the maximal-ratio test above
        CHECK(true);
    }
}

TEST_CASE("reduction chain identities") {
    GridSpec g(16.0, 64);
    const CurveParams curve;
    SampledField gf = random_bandlimited_field(g, FrequencySupport::annulus(1), 9);

    ReductionChainReport rep = reduction_chain_check(gf, 64.0, 3.2, 0.5, 1e-9, curve, 3);
    CHECK(rep.pass);
    CHECK(rep.rescale_identity_err <= 1e-6);
    CHECK(rep.norm_identity_err <= 1e-10);
    // p = 16/5, eps -> 0: threshold s* = 3/8
    CHECK(rep.summability_threshold == doctest::Approx(0.375).epsilon(1e-6));
    CHECK(rep.series_converges);  // s = 0.5 > 3/8

    // p = 2: the chain formula gives s* = 2 eps (the spec example quoting
    // 1/2 mis-evaluates its own formula; see the decisions record)
    ReductionChainReport rep2 = reduction_chain_check(gf, 16.0, 2.0, 1e-12, 1e-9, curve, 4);
    CHECK(rep2.summability_threshold == doctest::Approx(2e-9).epsilon(1e-3));
    CHECK(!rep2.series_converges);  // s = 1e-12 < 2e-9

    SampledField ball = random_bandlimited_field(g, FrequencySupport::unit_ball(), 10);
    CHECK_THROWS(reduction_chain_check(ball, 64.0, 3.2, 0.5, 1e-9, curve, 3));
}

TEST_CASE("descriptive maximal sweep emits slopes against the reference") {
    MaximalSweepReport rep = maximal_sweep({8.0, 16.0, 32.0}, 3.2, CurveParams{}, 5);
    CHECK(rep.rows.size() == 3);
    CHECK(rep.reference_exponent == doctest::Approx(2.0 / 3.2 - 0.625));
    for (const auto& row : rep.rows) CHECK(row.ratio > 0.0);
    CHECK(std::isfinite(rep.fit.slope));
}
