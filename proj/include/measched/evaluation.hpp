#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "measched/environment.hpp"
#include "measched/simulator.hpp"

namespace measched {

struct PolicyReport {
    std::string policy;
    std::size_t episodes = 0;
    std::size_t steps = 0;
    double mean_reward = 0.0;
    double stderr_reward = 0.0;
    /// Per-episode undiscounted returns, in dataset order.
    std::vector<double> returns;
    /// Fraction of steps on which each channel was requested.
    std::vector<double> selection;
    /// Same, restricted to steps whose revealed row is healthy / critical.
    std::vector<double> selection_healthy;
    std::vector<double> selection_critical;
    std::size_t healthy_steps = 0;
    std::size_t critical_steps = 0;
};

struct EvalReport {
    std::vector<PolicyReport> policies;
    nlohmann::json config;
    std::uint64_t policy_seed = 0;
    std::uint64_t dataset_seed = 0;
};

/// Rolls `policy` over every trajectory. Episode i draws from substream i of
/// `seed`, so results do not depend on `threads`. Hidden states are read from
/// the trajectories for the conditional frequencies only.
PolicyReport evaluate(const Policy& policy, const Dataset& data, const EnvConfig& env_cfg,
                      const OracleConfig& oracle_cfg, std::uint64_t seed, unsigned threads = 1);

struct TraceStep {
    std::size_t t = 0;
    int hidden_state = 0;
    int label = 0;
    Action action;
    std::vector<double> rewards;
    /// Forecast probability on the agent's window after this step's reveal.
    double probability = 0.5;
};

std::vector<TraceStep> trace_policy(const Policy& policy, const Trajectory& trajectory,
                                    const EnvConfig& env_cfg, const OracleConfig& oracle_cfg, Rng& rng);

/// Channel indices (0-based) by descending overall selection frequency;
/// ties go to the lower index.
std::vector<int> rank_features(const PolicyReport& report);

void write_table_csv(std::ostream& out, const std::vector<PolicyReport>& reports);
nlohmann::json to_json(const PolicyReport& report);
nlohmann::json to_json(const EvalReport& report);
void write_trace_jsonl(std::ostream& out, const std::vector<TraceStep>& trace);

}  // namespace measched
