#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "measched/errors.hpp"
#include "measched/rng.hpp"

namespace measched {

/// Parameters of the two-state (healthy/critical) patient model.
///
/// Channels 1..3 are informative (mean +1 when critical, -1 when healthy),
/// channel 5 carries a Bernoulli offset, all other channels are pure noise.
struct SimConfig {
    double p_h2c = 0.1;
    double p_c2h = 0.3;
    int terminal_run = 5;
    int n_channels = 6;
    int len_min = 20;
    int len_max = 40;
    double missing_rate = 0.2;
    double bernoulli_p = 0.5;
    bool noise_enabled = true;
    /// Steps ahead that a label looks for the terminal event.
    int label_horizon = 5;
    /// Hidden state at t = 0 (test hook; patients normally start healthy).
    int initial_state = 0;
    std::uint64_t seed = 20180717;

    void validate() const;
};

struct Trajectory {
    int n_channels = 0;
    std::vector<std::uint8_t> states;
    /// T x K, row-major; 0 where mask is 0.
    std::vector<double> values;
    /// T x K, row-major; 1 = value generated and retained.
    std::vector<std::uint8_t> mask;
    std::vector<std::uint8_t> labels;
    std::optional<int> terminal_step;

    std::size_t length() const { return states.size(); }
    double value(std::size_t t, int k) const { return values[t * n_channels + k]; }
    bool observed(std::size_t t, int k) const { return mask[t * n_channels + k] != 0; }

    bool operator==(const Trajectory&) const = default;
};

struct Measurements {
    std::vector<double> values;
    std::vector<std::uint8_t> mask;
};

struct EventLabels {
    std::vector<std::uint8_t> labels;
    std::optional<int> terminal_step;
};

/// Markov chain from `initial_state`, stopped at the first completed terminal
/// run or at a maximum length drawn uniformly from [len_min, len_max].
std::vector<std::uint8_t> simulate_states(const SimConfig& cfg, Rng& rng);

Measurements emit_measurements(const std::vector<std::uint8_t>& states, const SimConfig& cfg,
                               Rng& rng);

EventLabels label_events(const std::vector<std::uint8_t>& states, const SimConfig& cfg);

Trajectory simulate_trajectory(const SimConfig& cfg, Rng& rng);

struct Dataset {
    SimConfig config;
    std::uint64_t seed = 0;
    std::vector<Trajectory> trajectories;

    std::size_t size() const { return trajectories.size(); }
};

/// Trajectory i is drawn from substream i of `seed`, so the result does not
/// depend on `threads`.
Dataset generate_dataset(const SimConfig& cfg, std::size_t n, std::uint64_t seed,
                         unsigned threads = 1);

struct DatasetSummary {
    double mean_length = 0.0;
    double event_rate = 0.0;
    double missing_fraction = 0.0;
    double critical_fraction = 0.0;
};

DatasetSummary summarize(const Dataset& data);

}  // namespace measched
