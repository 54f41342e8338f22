#pragma once

// Registered invariant suites: each runs a module's property checks under a
// fixed seed and returns a machine-readable verdict. Shared by the CLI
// property-suite command and the acceptance runner.

#include <string>
#include <vector>

#include <json.hpp>

namespace curvelab {

struct SuiteResult {
    std::string name;
    bool pass = false;
    nlohmann::json details;
};

std::vector<std::string> suite_names();

// Throws std::invalid_argument for an unknown name.
SuiteResult run_suite(const std::string& name, std::uint64_t seed);

} // namespace curvelab
