#include "curvelab/suites.hpp"

#include <cmath>
#include <random>

#include "curvelab/broadnorm.hpp"
#include "curvelab/bump.hpp"
#include "curvelab/parallel.hpp"
#include "curvelab/sweeps.hpp"
#include "curvelab/variety.hpp"

namespace curvelab {

namespace {

using nlohmann::json;

// --------------------------------------------------------------------------
// Lemma 3.3 inequalities + broad-mass monotonicity, 50 seeded instances
// --------------------------------------------------------------------------
SuiteResult suite_lemma33(std::uint64_t seed) {
    SuiteResult res;
    res.name = "lemma33";
    const double R = 32.0;
    GridSpec grid(64.0, 128);
    const CurveParams curve;
    int fail = 0;
    double worst_cp = 0.0, worst_ck = 0.0, worst_sub = 0.0;
    const int instances = 50;
    for (int i = 0; i < instances; ++i) {
        std::mt19937_64 rng(split_seed(seed, i));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        const int K = (i % 2 == 0) ? 2 : 4;
        BroadParams params;
        params.K = K;
        params.M = 1.0;
        params.p = 2.0 + 1.2 * u01(rng);
        params.q = std::vector<double>{1.0, 2.0, 4.0}[i % 3];
        const double r_exp = params.p * (1.3 + 0.7 * u01(rng));
        const int A1 = i % 2, A2 = (i / 2) % 2 + (i % 3 == 0 ? 1 : 0);

        const Vec2 xi0{0.4 * (2.0 * u01(rng) - 1.0), 0.4 * (2.0 * u01(rng) - 1.0)};
        SampledField f = random_bandlimited_field(
            grid, FrequencySupport::ball_at(xi0, 1.0 / params.M), split_seed(seed, 100 + i));
        SampledField g = random_bandlimited_field(
            grid, FrequencySupport::ball_at(xi0, 1.0 / params.M), split_seed(seed, 200 + i));

        auto rand_box = [&] {
            const double x0 = -R + 2.0 * R * u01(rng) * 0.5;
            const double y0 = -R + 2.0 * R * u01(rng) * 0.5;
            const double t0 = R * u01(rng) * 0.5;
            return Region::box(Vec2{x0, y0}, Vec2{x0 + R * (0.3 + 0.7 * u01(rng)),
                                                  y0 + R * (0.3 + 0.7 * u01(rng))},
                               t0, t0 + R * (0.3 + 0.5 * u01(rng)));
        };
        const Region U1 = rand_box(), U2 = rand_box();

        Lemma33Report rep =
            lemma33_suite(f, g, U1, U2, params, A1, A2, r_exp, R, curve);
        if (!(rep.pass1 && rep.pass2 && rep.pass3)) ++fail;
        worst_sub = std::max(worst_sub, rep.rhs1 > 0 ? rep.lhs1 / rep.rhs1 : 0.0);
        worst_cp = std::max(worst_cp, rep.measured_cp);
        worst_ck = std::max(worst_ck, rep.measured_ck);

        // monotonicity of the broad mass in A, exact, on one engine
        BroadParams pm = params;
        pm.A = A1 + A2;
        BroadEngine eng(f, pm, R, curve);
        const auto& cells = eng.cells();
        for (std::size_t b = 0; b < cells.ball_centers.size(); b += 7) {
            for (int j = 0; j < cells.intervals; j += 3) {
                double prev = eng.local_broad_mass(b, j, 0).value;
                for (int A = 1; A <= 3; ++A) {
                    const double cur = eng.local_broad_mass(b, j, A).value;
                    if (cur > prev * (1.0 + 1e-12) + 1e-300) ++fail;
                    prev = cur;
                }
            }
        }
    }
    res.pass = fail == 0;
    res.details = json{{"instances", instances},
                       {"failures", fail},
                       {"worst_subadditivity_ratio", worst_sub},
                       {"worst_measured_cp", worst_cp},
                       {"worst_measured_ck", worst_ck}};
    return res;
}

// --------------------------------------------------------------------------
// Lemma 7.1 uncertainty corpus: 10 kernels x 8 (rho, r) pairs + exact
// plane-wave case
// --------------------------------------------------------------------------
SuiteResult suite_lemma71(std::uint64_t seed) {
    SuiteResult res;
    res.name = "lemma71_uncertainty";
    int fail = 0;
    double worst = 0.0;
    json cases = json::array();

    for (int kernel = 0; kernel < 10; ++kernel) {
        std::mt19937_64 rng(split_seed(seed, kernel));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        for (int pair = 0; pair < 8; ++pair) {
            const double r = std::vector<double>{0.25, 0.5, 1.0, 2.0}[pair % 4];
            const double rho = (pair < 4 ? 1.0 : 0.25) / r;
            const int nodes = 33;
            std::vector<double> xi(nodes);
            std::vector<cplx> spec(nodes);
            const double xi0 = 0.3;
            for (int q = 0; q < nodes; ++q) {
                const double u = -1.0 + 2.0 * (q + 0.5) / nodes;  // in (-1, 1)
                xi[q] = xi0 + r * u;
                switch (kernel) {
                    case 0: spec[q] = 1.0; break;                       // Dirichlet
                    case 1: spec[q] = 1.0 - std::abs(u); break;         // Fejer-type
                    case 2: spec[q] = std::exp(-4.0 * u * u); break;    // truncated Gaussian
                    case 3: spec[q] = u; break;                         // odd weight
                    case 4: spec[q] = PouBump::value(0.5 * u); break;   // plateau bump
                    default: spec[q] = std::polar(1.0, kTwoPi * u01(rng));  // random phases
                }
            }
            UncertaintyReport rep = uncertainty_check_1d(xi, spec, xi0, r, rho, 10.0);
            if (!rep.pass) ++fail;
            worst = std::max(worst, rep.bound > 0 ? rep.worst_ratio / (rep.bound / 10.0) : 0.0);
        }
    }

    // plane wave: single spectral node, |G| constant; ratio equals the
    // measure ratio exactly, so C = 1 suffices
    {
        UncertaintyReport rep =
            uncertainty_check_1d({0.3}, {cplx{1.0, 0.0}}, 0.3, 0.25, 1.0, 1.0 + 1e-9);
        if (!rep.pass) ++fail;
        cases.push_back({{"plane_wave_ratio", rep.worst_ratio}, {"bound", rep.bound}});
    }
    // rho = 1/r edge: bound is the full mass, trivially satisfied
    {
        std::mt19937_64 rng(split_seed(seed, 77));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::vector<double> xi(17);
        std::vector<cplx> spec(17);
        for (int q = 0; q < 17; ++q) {
            xi[q] = 0.25 * (-1.0 + 2.0 * (q + 0.5) / 17.0);
            spec[q] = std::polar(1.0, kTwoPi * u01(rng));
        }
        UncertaintyReport rep = uncertainty_check_1d(xi, spec, 0.0, 0.25, 4.0, 10.0);
        if (!rep.pass) ++fail;
    }

    res.pass = fail == 0;
    res.details = json{{"failures", fail}, {"worst_constant", worst}, {"edge_cases", cases}};
    return res;
}

// --------------------------------------------------------------------------
// Theorem 7.1 transverse equidistribution for a vertical plane
// --------------------------------------------------------------------------
SuiteResult suite_thm71(std::uint64_t seed) {
    (void)seed;
    SuiteResult res;
    res.name = "thm71_equidistribution";
    const double R = 1024.0;
    const double delta2 = 0.15;
    const CurveParams curve;
    const Variety Z = Variety::plane(Vec3{1.0, 0.0, 0.0}, 0.0);
    const double ball_r = std::pow(R, 0.5 + delta2);
    const Vec3 center{0.0, 0.0, R / 2.0};

    // tangent packets: G(theta) in the plane means theta_x = 0; spread the
    // tube cores across the ball in x1 and aim them through the center
    std::vector<Tile> packets;
    const double t0 = center.t;
    for (int a = -2; a <= 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            Tile tile;
            tile.R = R;
            tile.theta = Vec2{0.0, (b == 0 ? 0.25 : -0.2)};
            const double x1 = 0.35 * ball_r * a / 2.0;
            tile.nu = Vec2{x1, 2.0 * t0 * tile.theta.y};
            packets.push_back(tile);
        }
    }
    EquidistributionReport rep =
        equidistribution_check(packets, curve, Z, center, ball_r, R, delta2);
    res.pass = rep.pass;
    json sweep = json::array();
    for (auto& [rho, ratio] : rep.sweep) sweep.push_back({{"rho", rho}, {"ratio", ratio}});
    res.details = json{{"fitted_exponent", rep.fitted_exponent},
                       {"target", -0.5},
                       {"threshold", -0.4},
                       {"sweep", sweep}};
    return res;
}

// --------------------------------------------------------------------------
// Theorem 7.2 packet mass on balls
// --------------------------------------------------------------------------
SuiteResult suite_thm72(std::uint64_t seed) {
    (void)seed;
    SuiteResult res;
    res.name = "thm72_packet_mass";
    const double R = 256.0;
    const double delta2 = 0.15;
    const double r = std::pow(R, 0.5 + delta2);
    const CurveParams curve;
    const double t0 = R / 2.0;
    const Vec3 z{0.0, 0.0, t0};

    int fail = 0;
    json cases = json::array();
    auto check = [&](const std::vector<Tile>& tiles, const std::string& label) {
        PacketMassReport rep = packet_ball_mass_check(tiles, curve, z, r, R);
        if (!rep.pass) ++fail;
        cases.push_back({{"case", label},
                         {"ratio", rep.ratio},
                         {"lower", rep.lower},
                         {"upper", rep.upper},
                         {"pass", rep.pass}});
        return rep;
    };

    Tile central;
    central.R = R;
    central.theta = Vec2{0.0, 0.0};
    central.nu = Vec2{0.0, 0.0};
    check({central}, "central packet");

    Tile moving;
    moving.R = R;
    moving.theta = Vec2{0.4, 0.2};
    moving.nu = moving.theta * (2.0 * t0);  // core passes through z at t0
    check({moving}, "moving packet");

    // two packets with disjoint frequency cubes (orthogonal): additivity
    Tile a = central, b = moving;
    PacketMassReport ra = packet_ball_mass_check({a}, curve, z, r, R);
    PacketMassReport rb = packet_ball_mass_check({b}, curve, z, r, R);
    PacketMassReport rab = check({a, b}, "two orthogonal packets");
    const double add_err =
        std::abs(rab.mass - (ra.mass + rb.mass)) / std::max(1e-300, ra.mass + rb.mass);
    if (add_err > 0.05) ++fail;

    // empty input: vacuous pass with flag
    PacketMassReport rz = packet_ball_mass_check({}, curve, z, r, R);
    if (!(rz.pass && rz.vacuous)) ++fail;

    res.pass = fail == 0;
    res.details = json{{"failures", fail}, {"additivity_error", add_err}, {"cases", cases}};
    return res;
}

// --------------------------------------------------------------------------
// Tube localization scan (criterion 5 geometry, honest measurement)
// --------------------------------------------------------------------------
SuiteResult suite_tube_localization(std::uint64_t seed) {
    (void)seed;
    SuiteResult res;
    res.name = "tube_localization";
    const double R = 256.0;
    const double delta = 0.1;
    const CurveParams curve;
    const double w = 1.0 / std::sqrt(R);
    const double sR = std::sqrt(R);

    std::vector<Tile> tiles;
    for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j)
            for (int n = 0; n < 2; ++n) {
                Tile t;
                t.R = R;
                t.theta = Vec2{i * w, j * w};
                t.nu = Vec2{n * sR, 0.0};
                tiles.push_back(t);
            }

    double min_frac = 1.0, min_frac6 = 1.0, max_sup_ratio = 0.0;
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        TubeMassReport rep = tube_mass_fraction(tiles[i], curve, delta);
        min_frac = std::min(min_frac, rep.fraction);
        min_frac6 = std::min(min_frac6, rep.fraction_dilated6);
        max_sup_ratio = std::max(max_sup_ratio, rep.sup_outside / rep.sup_bound);
    }

    // the asymptotic content at finite R: the dilated tube holds the mass and
    // the plain-tube fraction improves with R
    Tile central;
    central.R = R;
    central.theta = Vec2{0.0, 0.0};
    central.nu = Vec2{0.0, 0.0};
    Tile central_big = central;
    central_big.R = 1024.0;
    const double frac_R = tube_mass_fraction(central, curve, delta).fraction;
    const double frac_4R = tube_mass_fraction(central_big, curve, delta, 0.1, 96).fraction;

    res.pass = min_frac6 >= 0.9 && frac_4R > frac_R;
    res.details = json{{"tiles", tiles.size()},
                       {"min_fraction_plain", min_frac},
                       {"min_fraction_6x", min_frac6},
                       {"fraction_R256_central", frac_R},
                       {"fraction_R1024_central", frac_4R},
                       {"max_sup_outside_over_Rinvhalf", max_sup_ratio},
                       {"note", "plain-tube bound is asymptotic; desk-scale value reported"}};
    return res;
}

// --------------------------------------------------------------------------
// Cell/tube incidence on random partitions
// --------------------------------------------------------------------------
SuiteResult suite_incidence(std::uint64_t seed) {
    SuiteResult res;
    res.name = "incidence";
    const double R = 64.0;
    MassPoints mass = MassPoints::uniform_box(Vec3{-R, -R, 0.0}, Vec3{R, R, R}, 12);
    EqualSplitOptions opts;
    opts.seed = split_seed(seed, 1);
    SignCellDecomposition decomp =
        build_partition(mass, ProjectedPolySpace::full(4), 4, std::pow(R, 0.6), opts);

    std::mt19937_64 rng(split_seed(seed, 2));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<CoreLine> tubes;
    for (int i = 0; i < 200; ++i) {
        CoreLine line;
        line.base = Vec2{R * u(rng), R * u(rng)};
        line.velocity = Vec2{-2.0 * u(rng), -2.0 * u(rng)};
        line.t_max = R;
        tubes.push_back(line);
    }
    IncidenceReport rep = cell_tube_incidence(decomp, tubes);
    res.pass = rep.pass;
    res.details = json{{"max_cells_per_tube", rep.max_cells_per_tube},
                       {"bound", rep.degree_bound},
                       {"product_degree", decomp.product_degree()},
                       {"rounds", decomp.rounds}};
    return res;
}

} // namespace

std::vector<std::string> suite_names() {
    return {"lemma33",      "lemma71_uncertainty", "thm71_equidistribution",
            "thm72_packet_mass", "tube_localization",  "incidence"};
}

SuiteResult run_suite(const std::string& name, std::uint64_t seed) {
    if (name == "lemma33") return suite_lemma33(seed);
    if (name == "lemma71_uncertainty") return suite_lemma71(seed);
    if (name == "thm71_equidistribution") return suite_thm71(seed);
    if (name == "thm72_packet_mass") return suite_thm72(seed);
    if (name == "tube_localization") return suite_tube_localization(seed);
    if (name == "incidence") return suite_incidence(seed);
    throw std::invalid_argument("unknown suite: " + name);
}

} // namespace curvelab
