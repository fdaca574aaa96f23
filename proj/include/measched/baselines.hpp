#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "measched/environment.hpp"

namespace measched {

enum class HeuristicKind {
    F1_alone,
    F2_alone,
    F3_alone,
    F1_3_random,
    F1_3_all,
    F1_2_alone,
    F2_3_alone,
    never_measure,
};

/// How the two-channel baselines interpret "any of the two features".
enum class PairReading {
    /// Both channels of the pair every step.
    fixed_pair,
    /// One channel of the pair, chosen uniformly each step.
    random_one,
};

std::string to_string(HeuristicKind kind);
HeuristicKind heuristic_from_string(const std::string& name);

/// The seven clinical heuristics followed by the never-measure control.
const std::vector<HeuristicKind>& all_heuristics();

/// State-independent scheduling rule; only the informative channels (1..3)
/// are ever requested.
class HeuristicPolicy : public Policy {
public:
    HeuristicPolicy(HeuristicKind kind, int n_channels, PairReading reading = PairReading::fixed_pair);

    Action act(std::span<const double> state, Rng& rng) const override;
    std::string name() const override { return to_string(kind_); }
    HeuristicKind kind() const { return kind_; }

    /// Channels requested per step (expected value for the random variants).
    double channels_per_step() const;

private:
    HeuristicKind kind_;
    int n_channels_;
    PairReading reading_;
};

}  // namespace measched
