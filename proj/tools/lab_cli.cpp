// Command-line driver for the lab: experiment execution, report emission,
// and the invariant suite runner.

#include <CLI11.hpp>

#include <iostream>

#include "curvelab/cli_commands.hpp"
#include "curvelab/parallel.hpp"

int main(int argc, char** argv) {
    CLI::App app{"curvelab - numerical laboratory for curve-shifted Schrodinger estimates"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string config_path, out_dir = "out", suite_filter;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;

    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker pool size (0 = auto)");
    auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides config)");

    CLI::App* c_dec = app.add_subcommand("decompose", "wave-packet decomposition of a field");
    CLI::App* c_max = app.add_subcommand("maximal-sweep", "descriptive maximal-ratio sweep over R");
    CLI::App* c_cex = app.add_subcommand("counterexample", "necessity sweep of the bump family");
    CLI::App* c_par = app.add_subcommand("partition-demo", "polynomial partitioning demo");
    CLI::App* c_eq = app.add_subcommand("equidistribution", "transverse equidistribution sweep");
    CLI::App* c_ps = app.add_subcommand("property-suite", "run registered invariant suites");
    c_ps->add_option("--suite", suite_filter, "run only the named suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : curvelab::cli::kExitConfigError;
    }
    seed_set = seed_opt->count() > 0;

    if (threads > 0) curvelab::set_thread_count(threads);

    nlohmann::json config = nlohmann::json::object();
    if (!config_path.empty()) {
        try {
            config = curvelab::cli::load_config(config_path);
        } catch (const std::exception& e) {
            std::cerr << e.what() << "\n";
            return curvelab::cli::kExitConfigError;
        }
    }
    if (seed_set) config["seed"] = seed;  // flag > config > default

    try {
        if (c_dec->parsed()) return curvelab::cli::cmd_decompose(config, out_dir);
        if (c_max->parsed()) return curvelab::cli::cmd_maximal_sweep(config, out_dir);
        if (c_cex->parsed()) return curvelab::cli::cmd_counterexample(config, out_dir);
        if (c_par->parsed()) return curvelab::cli::cmd_partition_demo(config, out_dir);
        if (c_eq->parsed()) return curvelab::cli::cmd_equidistribution(config, out_dir);
        if (c_ps->parsed())
            return curvelab::cli::cmd_property_suite(config, out_dir, suite_filter);
    } catch (const std::out_of_range& e) {
        std::cerr << e.what() << "\n";
        return curvelab::cli::kExitRangeError;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return curvelab::cli::kExitConfigError;
    }
    return curvelab::cli::kExitConfigError;
}
