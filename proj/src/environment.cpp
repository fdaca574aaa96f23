#include "measched/environment.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include <json.hpp>

#include "measched/errors.hpp"

namespace measched {

void EnvConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("environment.lambda must be >= 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("environment.gamma must lie in [0,1]");
    for (double c : cost)
        if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("environment.cost entries must be >= 0");
}

void EnvConfig::validate_for(int n_channels) const {
    validate();
    if (static_cast<int>(cost.size()) != n_channels)
        throw ConfigError("environment.cost has " + std::to_string(cost.size()) +
                          " entries but the simulator has " + std::to_string(n_channels) +
                          " channels");
}

std::size_t Action::count() const {
    std::size_t n = 0;
    for (auto b : bits) n += (b != 0);
    return n;
}

std::size_t state_dim(const EnvConfig& env_cfg, const OracleConfig& oracle_cfg) {
    const std::size_t base = static_cast<std::size_t>(oracle_cfg.window_len) * oracle_cfg.n_channels();
    return env_cfg.append_mask ? 2 * base : base;
}

MeasurementEnv::MeasurementEnv(const Trajectory& trajectory, EnvConfig env_cfg,
                               OracleConfig oracle_cfg)
    : traj_(&trajectory),
      env_cfg_(std::move(env_cfg)),
      oracle_cfg_(std::move(oracle_cfg)),
      K_(trajectory.n_channels),
      window_(oracle_cfg_.window_len, trajectory.n_channels),
      revealed_(oracle_cfg_.window_len, trajectory.n_channels) {
    oracle_cfg_.validate_for(K_);
    env_cfg_.validate_for(K_);
    if (trajectory.length() == 0) throw ConfigError("trajectory is empty");
}

std::size_t MeasurementEnv::state_dim() const { return measched::state_dim(env_cfg_, oracle_cfg_); }

std::vector<double> MeasurementEnv::observation() const {
    std::vector<double> s(window_.flat().begin(), window_.flat().end());
    if (env_cfg_.append_mask) s.insert(s.end(), revealed_.flat().begin(), revealed_.flat().end());
    return s;
}

std::vector<double> MeasurementEnv::reset() {
    window_.clear();
    revealed_.clear();
    t_ = 0;
    done_ = false;
    return observation();
}

StepResult MeasurementEnv::step(const Action& action) {
    if (done_) throw UsageError("step() called on a finished episode; call reset() first");
    if (static_cast<int>(action.size()) != K_)
        throw ConfigError("action has " + std::to_string(action.size()) + " bits, expected " +
                          std::to_string(K_));

    // The history for the pending row is the current window minus its oldest row.
    const auto history = window_.flat().subspan(static_cast<std::size_t>(K_));
    const bool positive = traj_->labels[t_] != 0;

    StepResult out;
    out.rewards.assign(K_, 0.0);
    std::vector<double> row(K_, 0.0);
    std::vector<double> shown(K_, 0.0);
    for (int k = 0; k < K_; ++k) {
        if (!action[k]) continue;
        const double value = traj_->observed(t_, k) ? traj_->value(t_, k) : 0.0;
        row[k] = value;
        shown[k] = traj_->observed(t_, k) ? 1.0 : 0.0;
        const double gain = positive ? predictive_gain(history, value, k, oracle_cfg_) : 0.0;
        out.rewards[k] = env_cfg_.lambda * gain - env_cfg_.cost[k];
    }
    window_.push(row);
    revealed_.push(shown);
    ++t_;
    done_ = (t_ == traj_->length());
    out.done = done_;
    out.next_state = observation();
    return out;
}

RolloutResult rollout(MeasurementEnv& env, const Policy& policy, Rng& rng) {
    RolloutResult result;
    auto state = env.reset();
    result.records.reserve(env.trajectory().length());
    while (!env.done()) {
        Action action = policy.act(state, rng);
        StepResult step = env.step(action);
        for (double r : step.rewards) result.accumulated_reward += r;
        result.records.push_back({std::move(state), std::move(action), step.rewards,
                                  step.next_state, step.done});
        state = std::move(step.next_state);
    }
    return result;
}

void write_transition_jsonl(std::ostream& out, const TransitionRecord& record) {
    nlohmann::json j;
    j["state"] = record.state;
    j["action"] = record.action.bits;
    j["rewards"] = record.rewards;
    j["next_state"] = record.next_state;
    j["done"] = record.done;
    out << j.dump() << '\n';
}

}  // namespace measched
