#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "measched/dqn.hpp"
#include "measched/environment.hpp"
#include "measched/oracle.hpp"
#include "measched/simulator.hpp"

namespace measched {

struct EvalSettings {
    std::size_t train_trajectories = 5000;
    std::size_t test_trajectories = 500;
    /// Offset added to the global seed for the held-out dataset.
    std::uint64_t test_seed_offset = 1000003;
    std::vector<std::string> baselines{"F1_alone",   "F2_alone",   "F3_alone",   "F1_3_random",
                                       "F1_3_all",   "F1_2_alone", "F2_3_alone", "never_measure"};
    /// "fixed_pair" or "random_one".
    std::string pair_reading = "fixed_pair";
};

/// Every setting for a run. Loaded from one JSON file; every key is optional
/// and unknown keys are rejected. Defaults are listed in docs/config.md.
struct RunConfig {
    std::uint64_t seed = 20180717;
    std::string output_dir = "out";
    unsigned threads = 1;
    SimConfig simulator;
    OracleConfig oracle;
    EnvConfig environment;
    DqnConfig dqn;
    EvalSettings evaluation;

    /// Cross-section checks (channel counts, gamma agreement).
    void validate() const;
    /// Propagates the global seed and the shared gamma into the sections.
    void sync();
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::string& path);

/// Parses "1,2,4,0,0,0".
std::vector<double> parse_vector(const std::string& text);

}  // namespace measched
