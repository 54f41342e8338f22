#pragma once

// Run manifests, config digests, and the CSV/JSON emission helpers shared by
// the CLI commands. Outputs are byte-stable under a fixed config and seed;
// timestamps live only in the manifest.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace curvelab {

inline constexpr int kSchemaVersion = 1;

// FNV-1a over the canonical (sorted-key) dump; stable under key reordering.
std::string config_digest(const nlohmann::json& config);

struct RunManifest {
    std::string command;
    std::string digest;
    std::uint64_t seed = 0;
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> artifacts;

    nlohmann::json to_json() const;
    void write(const std::string& path) const;
};

std::string iso_timestamp();

void write_text_file(const std::string& path, const std::string& content);
void write_json_file(const std::string& path, const nlohmann::json& j);

// Fixed-format float printing so outputs are byte-stable across runs.
std::string format_double(double v);

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    void add_row(const std::vector<std::string>& cells);
    void add_row(const std::vector<double>& cells);
    std::string str() const;
    void write(const std::string& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

} // namespace curvelab
