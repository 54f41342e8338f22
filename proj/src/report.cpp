#include "curvelab/report.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace curvelab {

std::string config_digest(const nlohmann::json& config) {
    // nlohmann::json objects iterate in sorted key order, so dump() is
    // already canonical.
    const std::string canon = config.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = command;
    j["config_digest"] = digest;
    j["seed"] = seed;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["artifacts"] = artifacts;
    return j;
}

void RunManifest::write(const std::string& path) const { write_json_file(path, to_json()); }

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvWriter::add_row(const std::vector<std::string>& cells) { rows_.push_back(cells); }

void CsvWriter::add_row(const std::vector<double>& cells) {
    std::vector<std::string> row;
    row.reserve(cells.size());
    for (double v : cells) row.push_back(format_double(v));
    rows_.push_back(std::move(row));
}

std::string CsvWriter::str() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
    os << "\n";
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << "\n";
    }
    return os.str();
}

void CsvWriter::write(const std::string& path) const { write_text_file(path, str()); }

} // namespace curvelab
