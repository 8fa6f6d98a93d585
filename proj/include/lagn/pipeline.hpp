#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace lagn {

// A declarative pipeline run: ordered stages over named corpus slots.
// Stage parameters are kept as parsed JSON; stage names and required
// parameters are checked at parse time, before any I/O.
struct RunConfig {
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_dir = ".";
    std::vector<nlohmann::json> stages;
    std::vector<std::string> stage_names;
    // Hash of the effective config with the thread count removed, so runs
    // differing only in parallelism produce identical artifacts.
    std::string config_hash;

    static RunConfig parse(const nlohmann::json& doc);
    static RunConfig parse_file(const std::string& path);
};

struct PipelineResult {
    std::vector<std::string> artifacts;  // paths written, in emission order
};

// Executes the stages in order. Any stage failure is rethrown as an Error
// naming the stage; artifacts written before the failure are left behind.
PipelineResult run(const RunConfig& config);

// FNV-1a 64-bit, hex-encoded; used for config hashes.
std::string fnv1a_hex(std::string_view data);

} // namespace lagn
