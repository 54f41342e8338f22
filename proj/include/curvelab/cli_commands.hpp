#pragma once

// CLI command bodies, callable from tests. Exit-code contract: 0 pass,
// 1 suite failure, 2 config error, 3 resource/range error, 4 search-budget
// soft failure.

#include <string>

#include <json.hpp>

namespace curvelab::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitSuiteFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRangeError = 3;
inline constexpr int kExitBudgetExhausted = 4;

int cmd_decompose(const nlohmann::json& config, const std::string& out_dir);
int cmd_maximal_sweep(const nlohmann::json& config, const std::string& out_dir);
int cmd_counterexample(const nlohmann::json& config, const std::string& out_dir);
int cmd_partition_demo(const nlohmann::json& config, const std::string& out_dir);
int cmd_equidistribution(const nlohmann::json& config, const std::string& out_dir);
int cmd_property_suite(const nlohmann::json& config, const std::string& out_dir,
                       const std::string& suite_filter);

// Merge precedence: flag > config-file > defaults; the merged document is
// what gets digested into the manifest.
nlohmann::json load_config(const std::string& path);

} // namespace curvelab::cli
