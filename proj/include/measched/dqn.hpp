#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "measched/environment.hpp"
#include "measched/nn.hpp"
#include "measched/rng.hpp"
#include "measched/simulator.hpp"

namespace measched {

struct DqnConfig {
    std::vector<std::size_t> hidden{64, 64};
    double gamma = 0.99;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    /// Fraction of train_steps over which epsilon decays linearly.
    double epsilon_decay_fraction = 0.5;
    std::size_t replay_capacity = 100000;
    std::size_t batch_size = 64;
    std::size_t target_sync_interval = 1000;
    std::size_t train_steps = 250000;
    std::size_t log_interval = 1000;
    /// Episodes averaged into the learning curve's mean_return column.
    std::size_t return_window = 100;
    nn::AdamConfig adam;
    std::uint64_t seed = 7;

    void validate() const;
    double epsilon_at(std::size_t step) const;
};

/// Q(s, a_k = 0) and Q(s, a_k = 1) for every channel.
struct FactoredQ {
    std::vector<double> q0;
    std::vector<double> q1;

    std::size_t size() const { return q0.size(); }
    double at(std::size_t k, bool bit) const { return bit ? q1[k] : q0[k]; }
    /// Joint Q of a multi-hot action under the additive factorization.
    double joint(const Action& action) const;
};

/// Per-channel state value and the advantage of each binary choice.
struct DuelingHeads {
    std::vector<double> value;
    /// advantage[2k + a] = A_k(a).
    std::vector<double> advantage;
};

/// Q_k(a) = V_k + A_k(a) - (A_k(0) + A_k(1)) / 2.
FactoredQ dueling_aggregate(const DuelingHeads& heads);

/// Splits a raw network output of size 3K (K values, then K advantage pairs).
DuelingHeads split_heads(std::span<const double> output, std::size_t n_channels);

/// Per channel: with probability epsilon a fair coin, otherwise argmax with
/// ties resolved to 0 (do not measure).
Action select_action(const FactoredQ& q, double epsilon, Rng& rng);

Action greedy_action(const FactoredQ& q);

/// Dueling Q-network forward pass.
FactoredQ evaluate_q(const nn::Network& net, std::span<const double> state, std::size_t n_channels,
                     nn::ForwardCache* cache = nullptr);

/// y_k = r_k + gamma * max_a Q_target(s', a_k), or r_k on terminal records.
std::vector<std::vector<double>> bellman_targets(std::span<const TransitionRecord* const> batch,
                                                 const nn::Network& target_net, std::size_t n_channels,
                                                 double gamma);

/// Mean over the batch of sum_k (Q(s, a_k) - y_k)^2; optionally its gradient.
double bellman_loss(const nn::Network& online, std::span<const TransitionRecord* const> batch,
                    const std::vector<std::vector<double>>& targets, std::size_t n_channels,
                    nn::Gradients* grads = nullptr);

/// Fixed-capacity ring buffer of transitions with uniform sampling.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(TransitionRecord record);
    std::size_t size() const { return records_.size(); }
    std::size_t capacity() const { return capacity_; }
    const TransitionRecord& at(std::size_t i) const { return records_[i]; }

    /// Distinct indices drawn uniformly; batch must not exceed size().
    std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const;
    std::vector<const TransitionRecord*> sample(std::size_t batch, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<TransitionRecord> records_;
};

class DqnAgent {
public:
    DqnAgent(std::size_t state_dim, std::size_t n_channels, DqnConfig cfg);

    const DqnConfig& config() const { return cfg_; }
    std::size_t n_channels() const { return n_channels_; }
    std::size_t state_dim() const { return online_.input_dim(); }

    FactoredQ q_values(std::span<const double> state) const;
    Action act(std::span<const double> state, double epsilon, Rng& rng) const;

    /// One optimizer step on the Bellman loss of `batch`; returns the loss.
    double train_step(std::span<const TransitionRecord* const> batch);
    void sync_target() { target_ = online_; }

    const nn::Network& online() const { return online_; }
    const nn::Network& target() const { return target_; }
    const nn::Adam& optimizer() const { return optimizer_; }
    std::size_t updates() const { return updates_; }

    nlohmann::json metadata() const;
    void save(const std::string& path, const nlohmann::json& extra = {}) const;
    /// Restores the online network (target synced to it) from a checkpoint.
    static DqnAgent load(const std::string& path);

private:
    DqnConfig cfg_;
    std::size_t n_channels_;
    nn::Network online_;
    nn::Network target_;
    nn::Adam optimizer_;
    std::size_t updates_ = 0;
};

/// Greedy (or fixed-epsilon) policy over a frozen Q-network snapshot.
class DqnPolicy : public Policy {
public:
    DqnPolicy(nn::Network net, std::size_t n_channels, double epsilon = 0.0, std::string label = "DQN");

    Action act(std::span<const double> state, Rng& rng) const override;
    std::string name() const override { return label_; }
    FactoredQ q_values(std::span<const double> state) const;

private:
    nn::Network net_;
    std::size_t n_channels_;
    double epsilon_;
    std::string label_;
};

struct CurvePoint {
    std::size_t step = 0;
    /// Mean training loss since the previous point; NaN before training starts.
    double loss = 0.0;
    double epsilon = 0.0;
    /// Mean undiscounted return of the most recent completed episodes.
    double mean_return = 0.0;
};

struct TrainResult {
    std::vector<CurvePoint> curve;
    std::size_t episodes = 0;
    std::size_t env_steps = 0;
};

/// Epsilon-greedy Q-learning over the dataset: episodes follow a seeded
/// per-epoch shuffle, one gradient step per environment step once the
/// replay holds a full batch, target synced every target_sync_interval steps.
TrainResult train(DqnAgent& agent, const Dataset& data, const EnvConfig& env_cfg,
                  const OracleConfig& oracle_cfg);

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

}  // namespace measched
