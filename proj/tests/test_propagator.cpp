#include <doctest.h>

#include "curvelab/bump.hpp"
#include "curvelab/propagator.hpp"
#include "test_oracles.hpp"

using namespace curvelab;

TEST_CASE("curve position") {
    CurveParams mu_x{Vec2{1.0, 0.0}};
    CHECK(curve_position({0, 0}, 1.0, mu_x).x == doctest::Approx(-1.0));
    CHECK(curve_position({0, 0}, 1.0, mu_x).y == doctest::Approx(0.0));
    Vec2 same = curve_position({0.3, -0.7}, 0.0, mu_x);
    CHECK(same.x == 0.3);
    CHECK(same.y == -0.7);
    CurveParams mu_y{Vec2{0.0, 1.0}};
    Vec2 p = curve_position({1, 1}, 4.0, mu_y);
    CHECK(p.x == doctest::Approx(1.0));
    CHECK(p.y == doctest::Approx(-1.0));
    CHECK_THROWS(curve_position({0, 0}, -0.1, mu_x));
    CHECK_THROWS(CurveParams{Vec2{1.0, 0.5}});
}

TEST_CASE("time cutoffs have the required plateaus and supports") {
    TimeCutoffs cut{64.0, 0.1};
    const double edge = std::pow(64.0, -0.9);
    CHECK(cut.psi1(0.0) == 1.0);
    CHECK(cut.psi1(edge) == 1.0);
    CHECK(cut.psi1(edge * 1.2) == 0.0);
    CHECK(cut.psi2(edge) == 1.0);
    CHECK(cut.psi2(0.5) == 1.0);
    CHECK(cut.psi2(1.0) == 1.0);
    CHECK(cut.psi2(edge * 0.97) > 0.0);   // inside the 0.05*edge transition
    CHECK(cut.psi2(edge * 0.90) == 0.0);  // below the support
    CHECK(cut.psi2(1.2) == 0.0);
    for (double u = 0.0; u < 1.3; u += 0.007) {
        CHECK(cut.psi1(u) >= 0.0);
        CHECK(cut.psi2(u) >= 0.0);
    }
}

TEST_CASE("evolve basics") {
    GridSpec g(16.0, 64);
    CurveParams curve;

    SUBCASE("t = 0 is the inverse transform") {
        SampledField F = oracle::random_field(g, 5, 2.0);
        SampledField u0 = evolve(F, 0.0, curve);
        SampledField inv = inverse_transform(F);
        CHECK(oracle::field_rel_diff(u0, inv) < 1e-12);
    }
    SUBCASE("single frequency evolves with constant modulus") {
        SampledField F(g, Side::frequency);
        F.at(3, 7) = cplx{0.8, 0.4};
        for (double t : {0.1, 1.0, 7.3}) {
            SampledField u = evolve(F, t, curve);
            double lo = 1e300, hi = 0.0;
            for (const cplx& v : u.values()) {
                lo = std::min(lo, std::abs(v));
                hi = std::max(hi, std::abs(v));
            }
            CHECK((hi - lo) / hi < 1e-12);
        }
    }
    SUBCASE("unitarity at random times") {
        SampledField F = oracle::random_field(g, 6, 3.0);
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> ut(0.0, 20.0);
        for (int i = 0; i < 10; ++i) {
            SampledField u = evolve(F, ut(rng), curve);
            CHECK(oracle::rel_err(u.l2_norm(), F.l2_norm()) < 1e-6);
        }
    }
    SUBCASE("negative time rejected") {
        SampledField F = oracle::random_field(g, 7, 2.0);
        CHECK_THROWS(evolve(F, -1.0, curve));
    }
    SUBCASE("matches the pointwise quadrature oracle") {
        SampledField F = oracle::random_field(g, 8, 2.0);
        SampledField u = evolve(F, 0.37, curve);
        // evolve_at sums the same quadrature without the FFT
        for (int i : {0, 11, 40}) {
            const cplx direct = evolve_at(F, Vec2{g.coord(i), g.coord(i / 2)}, 0.37, curve);
            CHECK(std::abs(direct - u.at(i, i / 2)) < 1e-9 * F.l2_norm());
        }
    }
}

TEST_CASE("reflection consistency between mu and -mu") {
    GridSpec g(16.0, 64);
    SampledField F = oracle::random_field(g, 13, 3.0);
    // g(x) = f(-x): frequency side ghat(xi) = fhat(-xi), periodic index flip
    SampledField Fr(g, Side::frequency);
    const int n = g.points_per_side;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) Fr.at((n - i) % n, (n - j) % n) = F.at(i, j);
    CurveParams plus{Vec2{0.6, 0.8}};
    CurveParams minus{Vec2{-0.6, -0.8}};
    const double t = 0.83;
    SampledField a = evolve(Fr, t, minus);
    SampledField b = evolve(F, t, plus);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            worst = std::max(worst,
                             std::abs(a.at(i, j) - b.at((n - i) % n, (n - j) % n)));
    CHECK(worst < 1e-10);
}

TEST_CASE("maximal function dominates every slice and refines monotonically") {
    GridSpec g(16.0, 64);
    CurveParams curve;
    SampledField F = oracle::random_field(g, 17, 2.5);
    TimeWindow win = TimeWindow::dyadic(1.0 / 64, 4.0, 8);
    SampledField m = maximal_function(F, win, curve);

    for (double t : win.nodes()) {
        SampledField u = evolve(F, t, curve);
        for (std::size_t i = 0; i < u.values().size(); ++i)
            CHECK(m.values()[i].real() >= std::abs(u.values()[i]) - 1e-14);
    }
    SampledField m2 = maximal_function(F, win.refined(), curve);
    for (std::size_t i = 0; i < m.values().size(); ++i)
        CHECK(m2.values()[i].real() >= m.values()[i].real() - 1e-14);

    SUBCASE("single frequency: constant field equal to the node mass") {
        SampledField D(g, Side::frequency);
        D.at(2, 5) = 3.0;
        SampledField md = maximal_function(D, win, curve);
        const double expect = 3.0 * g.freq_spacing() * g.freq_spacing();
        for (const cplx& v : md.values()) CHECK(std::abs(v.real() - expect) < 1e-12);
    }
    CHECK_THROWS(maximal_function(F, TimeWindow(0.1, 1.0, 8), curve));  // < 16 samples
}

TEST_CASE("base bound with the sharp Fourier-side constant") {
    GridSpec g(512.0, 256);  // frequency spacing ~0.0123 resolves all M <= 8
    CurveParams curve;
    TimeWindow win = TimeWindow::dyadic(1.0 / 32, 8.0, 6);

    SUBCASE("zero field passes vacuously") {
        SampledField F(g, Side::frequency);
        F.declare_support(FrequencySupport::ball_at({0, 0}, 1.0));
        BaseBoundReport rep = base_bound_check(F, win, curve);
        CHECK(rep.pass);
        CHECK(rep.lhs == 0.0);
    }
    SUBCASE("indicator of the unit ball attains the bound at t=0, x=0") {
        SampledField F(g, Side::frequency);
        const int n = g.points_per_side;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (Vec2{g.freq(i), g.freq(j)}.norm() <= 1.0) F.at(i, j) = 1.0;
        F.declare_support(FrequencySupport::ball_at({0, 0}, 1.0));
        BaseBoundReport rep = base_bound_check(F, win, curve);
        CHECK(rep.pass);
        // spectral norm is sqrt(pi) and the peak is pi, up to quadrature
        CHECK(std::abs(F.spectral_l2_norm() - std::sqrt(kPi)) / std::sqrt(kPi) < 0.03);
        CHECK(std::abs(rep.lhs - kPi) / kPi < 0.03);
        CHECK(rep.ratio <= std::sqrt(kPi) * (1 + 1e-9));
        CHECK(rep.ratio > std::sqrt(kPi) * 0.95);  // equality case
    }
    SUBCASE("random ball-supported data stays below sqrt(pi), all M") {
        for (double M : {1.0, 2.0, 4.0, 8.0}) {
            for (int k = 0; k < 3; ++k) {
                SampledField F = random_bandlimited_field(
                    g, FrequencySupport::ball_at({0.2, -0.1}, 1.0 / M), 100 + 10 * M + k);
                BaseBoundReport rep = base_bound_check(F, win, curve);
                CHECK(rep.pass);
                CHECK(rep.ratio <= std::sqrt(kPi) * (1 + 1e-9));
                // the discrete L1 bound dominates the sup exactly
                CHECK(rep.lhs <= rep.l1_bound * (1 + 1e-12));
            }
        }
    }
    SUBCASE("missing ball support is a contract error") {
        SampledField F = oracle::random_field(g, 23, 2.0);
        CHECK_THROWS(base_bound_check(F, win, curve));
    }
    SUBCASE("unresolved ball is a contract error") {
        GridSpec coarse(16.0, 64);
        SampledField F = random_bandlimited_field(
            coarse, FrequencySupport::ball_at({0, 0}, 1.0 / 8.0), 5);
        CHECK_THROWS(base_bound_check(F, win, curve));
    }
}

TEST_CASE("parabolic rescaling") {
    GridSpec g(16.0, 64);
    CurveParams curve;
    SampledField gfield = random_bandlimited_field(g, FrequencySupport::annulus(1), 31);

    SUBCASE("R = 1 is the identity") {
        SampledField g1 = parabolic_rescale(gfield, 1.0);
        CHECK(oracle::field_rel_diff(g1, gfield) == 0.0);
        CHECK(g1.grid().side_length == g.side_length);
    }
    SUBCASE("norm identity ||g|| = R^{-1} ||g1||") {
        for (double R : {4.0, 16.0, 64.0}) {
            SampledField g1 = parabolic_rescale(gfield, R);
            CHECK(oracle::rel_err(gfield.l2_norm(), g1.l2_norm() / R) < 1e-10);
            CHECK(oracle::rel_err(gfield.spectral_l2_norm() * R,
                                  g1.spectral_l2_norm()) < 1e-10);
        }
    }
    SUBCASE("matched-point identity e^{itH}g(x) = R^{-2} e^{isH}g1(y)") {
        std::mt19937_64 rng(37);
        std::uniform_real_distribution<double> ux(-2.0, 2.0), ut(0.01, 1.0);
        for (double R : {16.0, 64.0}) {
            SampledField g1 = parabolic_rescale(gfield, R);
            for (int i = 0; i < 20; ++i) {
                const Vec2 x{ux(rng), ux(rng)};
                const double t = ut(rng);
                const cplx lhs = evolve_at(gfield, x, t, curve);
                const cplx rhs = evolve_at(g1, x * (1.0 / R), t / (R * R), curve) / (R * R);
                CHECK(std::abs(lhs - rhs) <=
                      1e-6 * std::max({std::abs(lhs), std::abs(rhs), 1e-12}));
            }
        }
    }
    CHECK_THROWS(parabolic_rescale(gfield, 0.5));
}

TEST_CASE("necessity datum") {
    CurveParams curve;

    SUBCASE("support sits at lambda*mu with sqrt(lambda) extent") {
        GridSpec g(kPi * 128 / 40.0, 128);
        SampledField f = remark1_datum(g, 32.0, curve);
        REQUIRE(f.support().has_value());
        CHECK(f.support()->center.x == doctest::Approx(32.0));
        CHECK(f.support()->center.y == doctest::Approx(0.0));
        CHECK(f.support()->radius < 1.2 * std::sqrt(32.0));
        // out-of-range lambda
        CHECK_THROWS(remark1_datum(g, 64.0, curve));
        CHECK_THROWS(remark1_datum(g, 2.0, curve));
    }

    SUBCASE("spectral norm is sqrt(lambda) * ||psi||, exactly in quadrature") {
        GridSpec g(kPi * 256 / 80.0, 256);
        const double lambda = 64.0;
        SampledField f = remark1_datum(g, lambda, curve);
        // 1D quadrature of psi^2 on the same frequency nodes
        const double dxi = g.freq_spacing();
        double i1 = 0.0;
        for (int k = -g.points_per_side / 2; k < g.points_per_side / 2; ++k) {
            const double u = (dxi * k - lambda) / std::sqrt(lambda);
            i1 += PouBump::sq(u) * dxi;
        }
        double i2 = 0.0;
        for (int k = -g.points_per_side / 2; k < g.points_per_side / 2; ++k) {
            const double u = dxi * k / std::sqrt(lambda);
            i2 += PouBump::sq(u) * dxi;
        }
        const double expect = std::sqrt(i1 * i2);
        CHECK(oracle::rel_err(f.spectral_l2_norm(), expect) < 1e-12);
        // and the continuum value sqrt(lambda) * I with I = 1
        CHECK(oracle::rel_err(f.spectral_l2_norm(), std::sqrt(lambda)) < 2e-3);
    }

    SUBCASE("H^s to L^2 ratio scales like lambda^s") {
        GridSpec g(kPi * 512 / 300.0, 512);
        const double lambda = 256.0;
        SampledField f = remark1_datum(g, lambda, curve);
        for (double s : {0.25, 0.5, 1.0}) {
            const double ratio = sobolev_norm(f, s) / f.l2_norm();
            CHECK(std::abs(ratio / std::pow(lambda, s) - 1.0) < 0.1);
        }
    }

    SUBCASE("peak value ~ lambda at the moving stationary point") {
        GridSpec g(kPi * 256 / 80.0, 256);
        const double lambda = 64.0;
        SampledField f = remark1_datum(g, lambda, curve);
        // 1D bump integral on the grid nodes, for the amplitude normalization
        const double dxi = g.freq_spacing();
        double ipsi = 0.0;
        for (int k = -g.points_per_side / 2; k < g.points_per_side / 2; ++k)
            ipsi += PouBump::value(dxi * k / std::sqrt(lambda)) * dxi / std::sqrt(lambda);
        for (double t : {1.0 / lambda, 0.25 / lambda}) {
            const Vec2 peak{std::sqrt(t) - 2.0 * t * lambda, 0.0};
            const double value = std::abs(evolve_at(f, peak, t, curve));
            CHECK(value >= 0.5 * lambda * ipsi * ipsi);
        }
    }
}
