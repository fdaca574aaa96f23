#include "measched/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <ostream>

#include "measched/errors.hpp"

namespace measched {

void DqnConfig::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("dqn.gamma must lie in [0,1]");
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(epsilon_start) || !prob(epsilon_end)) throw ConfigError("dqn epsilon bounds must lie in [0,1]");
    if (!prob(epsilon_decay_fraction)) throw ConfigError("dqn.epsilon_decay_fraction must lie in [0,1]");
    if (batch_size == 0) throw ConfigError("dqn.batch_size must be >= 1");
    if (replay_capacity < batch_size) throw ConfigError("dqn.replay_capacity must be >= batch_size");
    if (target_sync_interval == 0) throw ConfigError("dqn.target_sync_interval must be >= 1");
    if (log_interval == 0) throw ConfigError("dqn.log_interval must be >= 1");
    if (return_window == 0) throw ConfigError("dqn.return_window must be >= 1");
    for (auto h : hidden)
        if (h == 0) throw ConfigError("dqn.hidden sizes must be >= 1");
}

double DqnConfig::epsilon_at(std::size_t step) const {
    const double decay_steps = epsilon_decay_fraction * static_cast<double>(train_steps);
    if (decay_steps <= 0.0 || static_cast<double>(step) >= decay_steps) return epsilon_end;
    const double frac = static_cast<double>(step) / decay_steps;
    return epsilon_start + (epsilon_end - epsilon_start) * frac;
}

double FactoredQ::joint(const Action& action) const {
    double q = 0.0;
    for (std::size_t k = 0; k < size(); ++k) q += at(k, action[k]);
    return q;
}

FactoredQ dueling_aggregate(const DuelingHeads& heads) {
    const std::size_t K = heads.value.size();
    FactoredQ q;
    q.q0.resize(K);
    q.q1.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double a0 = heads.advantage[2 * k];
        const double a1 = heads.advantage[2 * k + 1];
        // V + A(a) - mean(A) rewritten through the pair difference.
        const double half_gap = 0.5 * (a0 - a1);
        q.q0[k] = heads.value[k] + half_gap;
        q.q1[k] = heads.value[k] - half_gap;
    }
    return q;
}

DuelingHeads split_heads(std::span<const double> output, std::size_t n_channels) {
    if (output.size() != 3 * n_channels) throw ConfigError("dueling output must have 3K entries");
    DuelingHeads h;
    h.value.assign(output.begin(), output.begin() + static_cast<std::ptrdiff_t>(n_channels));
    h.advantage.assign(output.begin() + static_cast<std::ptrdiff_t>(n_channels), output.end());
    return h;
}

Action greedy_action(const FactoredQ& q) {
    Action a(q.size());
    for (std::size_t k = 0; k < q.size(); ++k) a.bits[k] = q.q1[k] > q.q0[k] ? 1 : 0;
    return a;
}

Action select_action(const FactoredQ& q, double epsilon, Rng& rng) {
    Action a(q.size());
    for (std::size_t k = 0; k < q.size(); ++k) {
        if (epsilon > 0.0 && rng.bernoulli(epsilon))
            a.bits[k] = rng.bernoulli(0.5) ? 1 : 0;
        else
            a.bits[k] = q.q1[k] > q.q0[k] ? 1 : 0;
    }
    return a;
}

FactoredQ evaluate_q(const nn::Network& net, std::span<const double> state, std::size_t n_channels,
                     nn::ForwardCache* cache) {
    const auto out = net.forward(state, cache);
    return dueling_aggregate(split_heads(out, n_channels));
}

std::vector<std::vector<double>> bellman_targets(std::span<const TransitionRecord* const> batch,
                                                 const nn::Network& target_net, std::size_t n_channels,
                                                 double gamma) {
    std::vector<std::vector<double>> targets;
    targets.reserve(batch.size());
    for (const TransitionRecord* rec : batch) {
        std::vector<double> y(rec->rewards.begin(), rec->rewards.end());
        if (!rec->done && gamma != 0.0) {
            const FactoredQ next = evaluate_q(target_net, rec->next_state, n_channels);
            for (std::size_t k = 0; k < n_channels; ++k) y[k] += gamma * std::max(next.q0[k], next.q1[k]);
        }
        targets.push_back(std::move(y));
    }
    return targets;
}

double bellman_loss(const nn::Network& online, std::span<const TransitionRecord* const> batch,
                    const std::vector<std::vector<double>>& targets, std::size_t n_channels,
                    nn::Gradients* grads) {
    if (batch.empty()) throw UsageError("empty training batch");
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    if (grads) *grads = online.zero_gradients();
    double loss = 0.0;
    nn::ForwardCache cache;
    std::vector<double> out_grad(3 * n_channels);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const TransitionRecord& rec = *batch[i];
        const FactoredQ q = evaluate_q(online, rec.state, n_channels, grads ? &cache : nullptr);
        std::fill(out_grad.begin(), out_grad.end(), 0.0);
        for (std::size_t k = 0; k < n_channels; ++k) {
            const bool bit = rec.action[k];
            const double err = q.at(k, bit) - targets[i][k];
            loss += err * err * inv_b;
            // dQ_k(bit)/dV_k = 1, dQ_k(bit)/dA_k(bit) = 1/2, dQ_k(bit)/dA_k(other) = -1/2
            const double d = 2.0 * err * inv_b;
            out_grad[k] = d;
            out_grad[n_channels + 2 * k + (bit ? 1 : 0)] = 0.5 * d;
            out_grad[n_channels + 2 * k + (bit ? 0 : 1)] = -0.5 * d;
        }
        if (grads) online.accumulate_backward(cache, out_grad, *grads);
    }
    return loss;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay capacity must be >= 1");
    records_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(TransitionRecord record) {
    if (records_.size() < capacity_) {
        records_.push_back(std::move(record));
    } else {
        records_[next_] = std::move(record);
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, Rng& rng) const {
    if (batch > records_.size()) throw UsageError("replay holds fewer records than the batch size");
    std::vector<std::size_t> idx;
    idx.reserve(batch);
    while (idx.size() < batch) {
        const auto i = static_cast<std::size_t>(rng.uniform_int(records_.size()));
        if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
    }
    return idx;
}

std::vector<const TransitionRecord*> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
    std::vector<const TransitionRecord*> out;
    for (auto i : sample_indices(batch, rng)) out.push_back(&records_[i]);
    return out;
}

namespace {

nn::Network make_dueling_net(std::size_t state_dim, std::size_t n_channels, const DqnConfig& cfg) {
    Rng rng = Rng(cfg.seed).split(0);
    return nn::Network::initialize(nn::Network::mlp_specs(state_dim, cfg.hidden, 3 * n_channels), rng);
}

nlohmann::json config_to_json(const DqnConfig& c) {
    return {{"hidden", c.hidden},
            {"gamma", c.gamma},
            {"epsilon_start", c.epsilon_start},
            {"epsilon_end", c.epsilon_end},
            {"epsilon_decay_fraction", c.epsilon_decay_fraction},
            {"replay_capacity", c.replay_capacity},
            {"batch_size", c.batch_size},
            {"target_sync_interval", c.target_sync_interval},
            {"train_steps", c.train_steps},
            {"log_interval", c.log_interval},
            {"return_window", c.return_window},
            {"learning_rate", c.adam.learning_rate},
            {"beta1", c.adam.beta1},
            {"beta2", c.adam.beta2},
            {"adam_epsilon", c.adam.epsilon},
            {"seed", c.seed}};
}

DqnConfig config_from_json(const nlohmann::json& j) {
    DqnConfig c;
    c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    c.gamma = j.at("gamma");
    c.epsilon_start = j.at("epsilon_start");
    c.epsilon_end = j.at("epsilon_end");
    c.epsilon_decay_fraction = j.at("epsilon_decay_fraction");
    c.replay_capacity = j.at("replay_capacity");
    c.batch_size = j.at("batch_size");
    c.target_sync_interval = j.at("target_sync_interval");
    c.train_steps = j.at("train_steps");
    c.log_interval = j.at("log_interval");
    c.return_window = j.at("return_window");
    c.adam.learning_rate = j.at("learning_rate");
    c.adam.beta1 = j.at("beta1");
    c.adam.beta2 = j.at("beta2");
    c.adam.epsilon = j.at("adam_epsilon");
    c.seed = j.at("seed");
    return c;
}

}  // namespace

DqnAgent::DqnAgent(std::size_t state_dim, std::size_t n_channels, DqnConfig cfg)
    : cfg_(std::move(cfg)),
      n_channels_(n_channels),
      online_(make_dueling_net(state_dim, n_channels, cfg_)),
      target_(online_),
      optimizer_(online_, cfg_.adam) {
    cfg_.validate();
    if (n_channels == 0 || state_dim == 0) throw ConfigError("agent dimensions must be >= 1");
}

FactoredQ DqnAgent::q_values(std::span<const double> state) const {
    return evaluate_q(online_, state, n_channels_);
}

Action DqnAgent::act(std::span<const double> state, double epsilon, Rng& rng) const {
    return select_action(q_values(state), epsilon, rng);
}

double DqnAgent::train_step(std::span<const TransitionRecord* const> batch) {
    const auto targets = bellman_targets(batch, target_, n_channels_, cfg_.gamma);
    nn::Gradients grads;
    const double loss = bellman_loss(online_, batch, targets, n_channels_, &grads);
    if (!std::isfinite(loss))
        throw TrainingError("non-finite Bellman loss at update " + std::to_string(updates_));
    optimizer_.step(online_, grads);
    ++updates_;
    return loss;
}

nlohmann::json DqnAgent::metadata() const {
    return {{"kind", "dueling-dqn"},
            {"n_channels", n_channels_},
            {"state_dim", state_dim()},
            {"updates", updates_},
            {"dqn", config_to_json(cfg_)}};
}

void DqnAgent::save(const std::string& path, const nlohmann::json& extra) const {
    auto meta = metadata();
    if (!extra.is_null()) meta["run"] = extra;
    nn::save_checkpoint(path, online_, meta);
}

DqnAgent DqnAgent::load(const std::string& path) {
    auto ckpt = nn::load_checkpoint(path);
    const auto& meta = ckpt.metadata;
    if (meta.value("kind", "") != "dueling-dqn") throw ConfigError("checkpoint is not a dueling DQN");
    DqnAgent agent(meta.at("state_dim").get<std::size_t>(), meta.at("n_channels").get<std::size_t>(),
                   config_from_json(meta.at("dqn")));
    if (agent.online_.specs() != ckpt.network.specs())
        throw ConfigError("checkpoint layers do not match its recorded configuration");
    agent.online_ = std::move(ckpt.network);
    agent.target_ = agent.online_;
    agent.optimizer_ = nn::Adam(agent.online_, agent.cfg_.adam);
    agent.updates_ = meta.at("updates").get<std::size_t>();
    return agent;
}

DqnPolicy::DqnPolicy(nn::Network net, std::size_t n_channels, double epsilon, std::string label)
    : net_(std::move(net)), n_channels_(n_channels), epsilon_(epsilon), label_(std::move(label)) {}

FactoredQ DqnPolicy::q_values(std::span<const double> state) const {
    return evaluate_q(net_, state, n_channels_);
}

Action DqnPolicy::act(std::span<const double> state, Rng& rng) const {
    return select_action(q_values(state), epsilon_, rng);
}

TrainResult train(DqnAgent& agent, const Dataset& data, const EnvConfig& env_cfg,
                  const OracleConfig& oracle_cfg) {
    if (data.trajectories.empty()) throw ConfigError("training dataset is empty");
    const DqnConfig& cfg = agent.config();
    const Rng root(cfg.seed);
    Rng shuffle_rng = root.split(1);
    Rng action_rng = root.split(2);
    Rng replay_rng = root.split(3);

    ReplayBuffer replay(cfg.replay_capacity);
    TrainResult result;
    std::vector<std::size_t> order(data.size());
    std::size_t cursor = order.size();
    std::deque<double> recent_returns;
    double loss_sum = 0.0;
    std::size_t loss_count = 0;

    auto mean_recent = [&] {
        if (recent_returns.empty()) return 0.0;
        return std::accumulate(recent_returns.begin(), recent_returns.end(), 0.0) /
               static_cast<double>(recent_returns.size());
    };

    std::size_t step = 0;
    while (step < cfg.train_steps) {
        if (cursor == order.size()) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            for (std::size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);
            cursor = 0;
        }
        MeasurementEnv env(data.trajectories[order[cursor++]], env_cfg, oracle_cfg);
        auto state = env.reset();
        double episode_return = 0.0;
        while (!env.done() && step < cfg.train_steps) {
            const double eps = cfg.epsilon_at(step);
            Action action = agent.act(state, eps, action_rng);
            StepResult out = env.step(action);
            for (double r : out.rewards) episode_return += r;
            replay.push({state, std::move(action), out.rewards, out.next_state, out.done});
            state = std::move(out.next_state);

            if (replay.size() >= cfg.batch_size) {
                const auto batch = replay.sample(cfg.batch_size, replay_rng);
                loss_sum += agent.train_step(batch);
                ++loss_count;
            }
            ++step;
            if (step % cfg.target_sync_interval == 0) agent.sync_target();
            if (step % cfg.log_interval == 0) {
                result.curve.push_back({step,
                                        loss_count ? loss_sum / static_cast<double>(loss_count)
                                                   : std::numeric_limits<double>::quiet_NaN(),
                                        eps, mean_recent()});
                loss_sum = 0.0;
                loss_count = 0;
            }
        }
        if (env.done()) {
            ++result.episodes;
            recent_returns.push_back(episode_return);
            if (recent_returns.size() > cfg.return_window) recent_returns.pop_front();
        }
    }
    result.env_steps = step;
    return result;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
    out << "step,loss,epsilon,mean_return\n";
    char buf[128];
    for (const auto& p : curve) {
        if (std::isnan(p.loss))
            std::snprintf(buf, sizeof buf, "%zu,,%.6f,%.6f\n", p.step, p.epsilon, p.mean_return);
        else
            std::snprintf(buf, sizeof buf, "%zu,%.9g,%.6f,%.6f\n", p.step, p.loss, p.epsilon, p.mean_return);
        out << buf;
    }
}

}  // namespace measched
