#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "measched/oracle.hpp"
#include "measched/rng.hpp"
#include "measched/simulator.hpp"

namespace measched {

struct EnvConfig {
    double lambda = 105.0;
    double gamma = 0.99;
    std::vector<double> cost{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    /// Appends a window_len x K "was revealed" indicator block to the state.
    bool append_mask = false;

    void validate() const;
    void validate_for(int n_channels) const;
};

/// Multi-hot measurement request; bit k = measure channel k at the next row.
struct Action {
    std::vector<std::uint8_t> bits;

    Action() = default;
    explicit Action(std::size_t k) : bits(k, 0) {}
    explicit Action(std::vector<std::uint8_t> b) : bits(std::move(b)) {}

    std::size_t size() const { return bits.size(); }
    bool operator[](std::size_t k) const { return bits[k] != 0; }
    std::size_t count() const;
    bool operator==(const Action&) const = default;
};

struct TransitionRecord {
    std::vector<double> state;
    Action action;
    std::vector<double> rewards;
    std::vector<double> next_state;
    bool done = false;

    bool operator==(const TransitionRecord&) const = default;
};

struct StepResult {
    std::vector<double> next_state;
    std::vector<double> rewards;
    bool done = false;
};

/// Sequential measurement process over one trajectory.
///
/// Each step reveals the next row of the trajectory, restricted to the
/// requested channels. Channel k earns lambda * gain_k - cost_k when it is
/// requested and the revealed row carries a positive label, -cost_k when it
/// is requested otherwise, and 0 when it is not requested.
class MeasurementEnv {
public:
    MeasurementEnv(const Trajectory& trajectory, EnvConfig env_cfg, OracleConfig oracle_cfg);

    std::vector<double> reset();
    StepResult step(const Action& action);

    bool done() const { return done_; }
    /// Index of the row the next step will reveal.
    std::size_t time() const { return t_; }
    std::size_t state_dim() const;
    int n_channels() const { return K_; }
    const Window& window() const { return window_; }
    const Trajectory& trajectory() const { return *traj_; }
    const EnvConfig& env_config() const { return env_cfg_; }
    const OracleConfig& oracle_config() const { return oracle_cfg_; }

    std::vector<double> observation() const;

private:
    const Trajectory* traj_;
    EnvConfig env_cfg_;
    OracleConfig oracle_cfg_;
    int K_;
    Window window_;
    Window revealed_;
    std::size_t t_ = 0;
    bool done_ = true;
};

std::size_t state_dim(const EnvConfig& env_cfg, const OracleConfig& oracle_cfg);

/// Maps an agent observation to a measurement request. Stochastic policies
/// draw only from the supplied stream, so a policy object is shareable.
class Policy {
public:
    virtual ~Policy() = default;
    virtual Action act(std::span<const double> state, Rng& rng) const = 0;
    virtual std::string name() const = 0;
};

struct RolloutResult {
    std::vector<TransitionRecord> records;
    double accumulated_reward = 0.0;
};

/// Runs `policy` to the end of the trajectory. The accumulated reward is the
/// undiscounted sum of every per-channel reward.
RolloutResult rollout(MeasurementEnv& env, const Policy& policy, Rng& rng);

void write_transition_jsonl(std::ostream& out, const TransitionRecord& record);

}  // namespace measched
