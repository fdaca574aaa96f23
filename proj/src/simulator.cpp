#include "measched/simulator.hpp"

#include <string>

#include "measched/parallel.hpp"

namespace measched {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void SimConfig::validate() const {
    if (!is_probability(p_h2c)) throw ConfigError("simulator.p_h2c must lie in [0,1]");
    if (!is_probability(p_c2h)) throw ConfigError("simulator.p_c2h must lie in [0,1]");
    if (!is_probability(missing_rate)) throw ConfigError("simulator.missing_rate must lie in [0,1]");
    if (!is_probability(bernoulli_p)) throw ConfigError("simulator.bernoulli_p must lie in [0,1]");
    if (terminal_run < 1) throw ConfigError("simulator.terminal_run must be >= 1");
    if (label_horizon < 0) throw ConfigError("simulator.label_horizon must be >= 0");
    if (n_channels < 4) throw ConfigError("simulator.n_channels must be >= 4");
    if (len_min < 1 || len_max < len_min)
        throw ConfigError("simulator length bounds must satisfy 1 <= len_min <= len_max");
    if (initial_state != 0 && initial_state != 1)
        throw ConfigError("simulator.initial_state must be 0 or 1");
}

std::vector<std::uint8_t> simulate_states(const SimConfig& cfg, Rng& rng) {
    const auto max_len = static_cast<std::size_t>(rng.uniform_range(cfg.len_min, cfg.len_max));
    std::vector<std::uint8_t> states;
    states.reserve(max_len);
    int state = cfg.initial_state;
    int run = 0;
    for (std::size_t t = 0; t < max_len; ++t) {
        if (t > 0) {
            if (state == 0)
                state = rng.bernoulli(cfg.p_h2c) ? 1 : 0;
            else
                state = rng.bernoulli(cfg.p_c2h) ? 0 : 1;
        }
        states.push_back(static_cast<std::uint8_t>(state));
        run = state ? run + 1 : 0;
        if (run == cfg.terminal_run) break;
    }
    return states;
}

Measurements emit_measurements(const std::vector<std::uint8_t>& states, const SimConfig& cfg,
                               Rng& rng) {
    const std::size_t K = cfg.n_channels;
    Measurements out;
    out.values.assign(states.size() * K, 0.0);
    out.mask.assign(states.size() * K, 1);
    for (std::size_t t = 0; t < states.size(); ++t) {
        const double bern = rng.bernoulli(cfg.bernoulli_p) ? 1.0 : 0.0;
        const double level = states[t] ? 1.0 : -1.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double eps = cfg.noise_enabled ? rng.normal() : 0.0;
            double y;
            if (k < 3)
                y = level + eps;
            else if (k == 4)
                y = bern + eps;
            else
                y = eps;
            const std::size_t idx = t * K + k;
            if (rng.bernoulli(cfg.missing_rate)) {
                out.mask[idx] = 0;
                out.values[idx] = 0.0;
            } else {
                out.values[idx] = y;
            }
        }
    }
    return out;
}

EventLabels label_events(const std::vector<std::uint8_t>& states, const SimConfig& cfg) {
    EventLabels out;
    out.labels.assign(states.size(), 0);
    int run = 0;
    for (std::size_t t = 0; t < states.size(); ++t) {
        run = states[t] ? run + 1 : 0;
        if (run == cfg.terminal_run) {
            out.terminal_step = static_cast<int>(t);
            break;
        }
    }
    if (out.terminal_step) {
        const int term = *out.terminal_step;
        for (int t = 0; t <= term; ++t)
            if (term - t <= cfg.label_horizon) out.labels[t] = 1;
    }
    return out;
}

Trajectory simulate_trajectory(const SimConfig& cfg, Rng& rng) {
    Trajectory traj;
    traj.n_channels = cfg.n_channels;
    traj.states = simulate_states(cfg, rng);
    auto meas = emit_measurements(traj.states, cfg, rng);
    traj.values = std::move(meas.values);
    traj.mask = std::move(meas.mask);
    auto events = label_events(traj.states, cfg);
    traj.labels = std::move(events.labels);
    traj.terminal_step = events.terminal_step;
    return traj;
}

Dataset generate_dataset(const SimConfig& cfg, std::size_t n, std::uint64_t seed, unsigned threads) {
    cfg.validate();
    if (n == 0) throw ConfigError("dataset size must be >= 1");
    Dataset data;
    data.config = cfg;
    data.config.seed = seed;
    data.seed = seed;
    data.trajectories.resize(n);
    const Rng root(seed);
    parallel_for(n, threads, [&](std::size_t i) {
        Rng rng = root.split(i);
        data.trajectories[i] = simulate_trajectory(cfg, rng);
    });
    return data;
}

DatasetSummary summarize(const Dataset& data) {
    DatasetSummary s;
    if (data.trajectories.empty()) return s;
    std::size_t steps = 0, events = 0, entries = 0, missing = 0, critical = 0;
    for (const auto& traj : data.trajectories) {
        steps += traj.length();
        events += traj.terminal_step.has_value();
        entries += traj.mask.size();
        for (auto m : traj.mask) missing += (m == 0);
        for (auto st : traj.states) critical += st;
    }
    const double n = static_cast<double>(data.trajectories.size());
    s.mean_length = static_cast<double>(steps) / n;
    s.event_rate = static_cast<double>(events) / n;
    s.missing_fraction = entries ? static_cast<double>(missing) / static_cast<double>(entries) : 0.0;
    s.critical_fraction = steps ? static_cast<double>(critical) / static_cast<double>(steps) : 0.0;
    return s;
}

}  // namespace measched
