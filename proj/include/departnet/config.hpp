#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "departnet/ingest.hpp"
#include "departnet/pipeline.hpp"
#include "departnet/synth.hpp"

namespace departnet {

struct RunConfig {
    std::string events_path;
    std::string workdir = "work";
    std::string attributes_path;  // optional
    EventFormat format = EventFormat::csv;
    OnMalformed on_malformed = OnMalformed::abort;
    PipelineConfig pipeline;
    int threads = 0;  // 0: OpenMP default
    std::uint64_t seed = 0;
    SimConfig simulation;
    int oracle_replicates = 200;
    std::string config_dir;  // relative paths resolve against this
};

// Unknown keys are rejected; throws ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j, const std::string& config_dir = ".");
RunConfig load_run_config(const std::string& path);

// Canonical JSON of everything that determines outputs (threads excluded).
nlohmann::json run_config_to_json(const RunConfig& config);

struct Overrides {
    std::optional<std::string> format;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
    std::optional<int> freeze;
    std::optional<std::string> weighting;
    std::optional<int> split_cutoff;
    std::optional<std::string> workdir;
};

// Flags win over the file; the root seed feeds matching and simulation.
void apply_overrides(RunConfig& config, const Overrides& overrides);
void validate(const RunConfig& config);

}  // namespace departnet
