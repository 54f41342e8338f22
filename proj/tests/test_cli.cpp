#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "curvelab/cli_commands.hpp"
#include "curvelab/report.hpp"

using namespace curvelab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / tag) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("config digest is stable under key order") {
    json a, b;
    a["zeta"] = 1;
    a["alpha"] = json{{"y", 2}, {"x", 3}};
    b["alpha"] = json{{"x", 3}, {"y", 2}};
    b["zeta"] = 1;
    CHECK(config_digest(a) == config_digest(b));
    b["zeta"] = 2;
    CHECK(config_digest(a) != config_digest(b));
}

TEST_CASE("decompose command") {
    TempDir dir("curvelab_cli_dec");
    json cfg{{"R", 16.0}, {"seed", 11}};
    CHECK(cli::cmd_decompose(cfg, dir.path.string()) == cli::kExitPass);
    CHECK(fs::exists(dir.path / "coefficients.csv"));
    CHECK(fs::exists(dir.path / "decompose_report.json"));
    CHECK(fs::exists(dir.path / "decompose_manifest.json"));

    json rep = json::parse(slurp(dir.path / "decompose_report.json"));
    CHECK(rep["pass"].get<bool>());
    CHECK(rep["frame_identity_error"].get<double>() <= 1e-3);
    // CSV rows = header + one per retained coefficient
    const std::string csv = slurp(dir.path / "coefficients.csv");
    const auto rows = std::count(csv.begin(), csv.end(), '\n');
    CHECK(rows == 1 + rep["coefficients"].get<std::int64_t>());
    CHECK(csv.rfind("theta_x,theta_y,nu_x,nu_y,re,im", 0) == 0);

    json manifest = json::parse(slurp(dir.path / "decompose_manifest.json"));
    CHECK(manifest["config_digest"] == config_digest(cfg));
    CHECK(manifest["artifacts"].size() == 2);

    SUBCASE("unreadable input path is a config error") {
        json bad{{"input", "/nonexistent/field.clf"}};
        CHECK(cli::cmd_decompose(bad, dir.path.string()) == cli::kExitConfigError);
    }
}

TEST_CASE("counterexample command") {
    TempDir dir("curvelab_cli_cex");

    SUBCASE("short lambda list cannot fit a slope") {
        json cfg{{"lambda_list", {16.0}}};
        CHECK(cli::cmd_counterexample(cfg, dir.path.string()) == cli::kExitConfigError);
    }
    SUBCASE("small sweep passes and is byte-stable under the same seed") {
        json cfg{{"lambda_list", {16.0, 32.0, 64.0}}, {"p", 3.2}, {"s", 0.0}, {"seed", 3}};
        CHECK(cli::cmd_counterexample(cfg, dir.path.string()) == cli::kExitPass);
        const std::string csv1 = slurp(dir.path / "counterexample.csv");
        const std::string rep1 = slurp(dir.path / "counterexample.json");
        CHECK(cli::cmd_counterexample(cfg, dir.path.string()) == cli::kExitPass);
        CHECK(slurp(dir.path / "counterexample.csv") == csv1);
        CHECK(slurp(dir.path / "counterexample.json") == rep1);
        json rep = json::parse(rep1);
        CHECK(std::abs(rep["measured_slope"].get<double>() - 0.34375) <= 0.05);
    }
    SUBCASE("grid overflow maps to the range exit code") {
        json cfg{{"lambda_list", {1e7, 2e7}}};
        CHECK(cli::cmd_counterexample(cfg, dir.path.string()) == cli::kExitRangeError);
    }
}

TEST_CASE("partition demo command") {
    TempDir dir("curvelab_cli_par");

    SUBCASE("uniform mass demo passes") {
        json cfg{{"D", 4}, {"m", 3}, {"mass", "uniform"}, {"seed", 1}};
        CHECK(cli::cmd_partition_demo(cfg, dir.path.string()) == cli::kExitPass);
        json rep = json::parse(slurp(dir.path / "partition.json"));
        CHECK(rep["cells"].get<int>() <= 64);
        CHECK(rep["converged"].get<bool>());
        CHECK(rep["max_cell_mass"].get<double>() <=
              1.05 * rep["total_mass"].get<double>() / 64.0);
        CHECK(fs::exists(dir.path / "cell_masses.csv"));
    }
    SUBCASE("symmetric line mass splits by a hyperplane") {
        json cfg{{"D", 2}, {"m", 1}, {"mass", "uniform"}, {"seed", 2}};
        CHECK(cli::cmd_partition_demo(cfg, dir.path.string()) == cli::kExitPass);
    }
    SUBCASE("point mass is degenerate but exits zero with the flag") {
        json cfg{{"D", 2}, {"m", 3}, {"mass", "point"}};
        CHECK(cli::cmd_partition_demo(cfg, dir.path.string()) == cli::kExitPass);
        json rep = json::parse(slurp(dir.path / "partition.json"));
        CHECK(rep["degenerate_mass"].get<bool>());
    }
    SUBCASE("bad parameters are config errors") {
        CHECK(cli::cmd_partition_demo(json{{"m", 4}}, dir.path.string()) ==
              cli::kExitConfigError);
        CHECK(cli::cmd_partition_demo(json{{"mass", "gibberish"}}, dir.path.string()) ==
              cli::kExitConfigError);
    }
}

TEST_CASE("equidistribution command") {
    TempDir dir("curvelab_cli_eq");
    json cfg{{"R", 1024.0}, {"delta2", 0.15}, {"levels", 4}};
    CHECK(cli::cmd_equidistribution(cfg, dir.path.string()) == cli::kExitPass);
    json rep = json::parse(slurp(dir.path / "equidistribution.json"));
    CHECK(rep["fitted_exponent"].get<double>() <= -0.4);
    const std::string csv = slurp(dir.path / "equidistribution.csv");
    CHECK(csv.rfind("rho,ratio", 0) == 0);
}

TEST_CASE("property suite command with a filter") {
    TempDir dir("curvelab_cli_ps");
    json cfg{{"seed", 1}};
    CHECK(cli::cmd_property_suite(cfg, dir.path.string(), "incidence") == cli::kExitPass);
    json rep = json::parse(slurp(dir.path / "property_suite.json"));
    CHECK(rep["verdicts"].size() == 1);
    CHECK(rep["verdicts"][0]["invariant"] == "incidence");
    CHECK(cli::cmd_property_suite(cfg, dir.path.string(), "nonsense") ==
          cli::kExitConfigError);
}
