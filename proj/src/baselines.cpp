#include "measched/baselines.hpp"

#include "measched/errors.hpp"

namespace measched {

namespace {

struct NamedKind {
    HeuristicKind kind;
    const char* name;
};

constexpr NamedKind kNames[] = {
    {HeuristicKind::F1_alone, "F1_alone"},       {HeuristicKind::F2_alone, "F2_alone"},
    {HeuristicKind::F3_alone, "F3_alone"},       {HeuristicKind::F1_3_random, "F1_3_random"},
    {HeuristicKind::F1_3_all, "F1_3_all"},       {HeuristicKind::F1_2_alone, "F1_2_alone"},
    {HeuristicKind::F2_3_alone, "F2_3_alone"},   {HeuristicKind::never_measure, "never_measure"},
};

}  // namespace

std::string to_string(HeuristicKind kind) {
    for (const auto& n : kNames)
        if (n.kind == kind) return n.name;
    return "unknown";
}

HeuristicKind heuristic_from_string(const std::string& name) {
    for (const auto& n : kNames)
        if (name == n.name) return n.kind;
    throw ConfigError("unknown baseline policy '" + name + "'");
}

const std::vector<HeuristicKind>& all_heuristics() {
    static const std::vector<HeuristicKind> kinds = {
        HeuristicKind::F1_alone,   HeuristicKind::F2_alone,   HeuristicKind::F3_alone,
        HeuristicKind::F1_3_random, HeuristicKind::F1_3_all,  HeuristicKind::F1_2_alone,
        HeuristicKind::F2_3_alone, HeuristicKind::never_measure};
    return kinds;
}

HeuristicPolicy::HeuristicPolicy(HeuristicKind kind, int n_channels, PairReading reading)
    : kind_(kind), n_channels_(n_channels), reading_(reading) {
    if (n_channels < 3) throw ConfigError("heuristics need at least three channels");
}

Action HeuristicPolicy::act(std::span<const double>, Rng& rng) const {
    Action a(static_cast<std::size_t>(n_channels_));
    auto pair = [&](int first) {
        if (reading_ == PairReading::fixed_pair) {
            a.bits[first] = a.bits[first + 1] = 1;
        } else {
            a.bits[first + static_cast<int>(rng.uniform_int(2))] = 1;
        }
    };
    switch (kind_) {
        case HeuristicKind::F1_alone: a.bits[0] = 1; break;
        case HeuristicKind::F2_alone: a.bits[1] = 1; break;
        case HeuristicKind::F3_alone: a.bits[2] = 1; break;
        case HeuristicKind::F1_3_random: a.bits[rng.uniform_int(3)] = 1; break;
        case HeuristicKind::F1_3_all: a.bits[0] = a.bits[1] = a.bits[2] = 1; break;
        case HeuristicKind::F1_2_alone: pair(0); break;
        case HeuristicKind::F2_3_alone: pair(1); break;
        case HeuristicKind::never_measure: break;
    }
    return a;
}

double HeuristicPolicy::channels_per_step() const {
    switch (kind_) {
        case HeuristicKind::F1_alone:
        case HeuristicKind::F2_alone:
        case HeuristicKind::F3_alone:
        case HeuristicKind::F1_3_random: return 1.0;
        case HeuristicKind::F1_3_all: return 3.0;
        case HeuristicKind::F1_2_alone:
        case HeuristicKind::F2_3_alone: return reading_ == PairReading::fixed_pair ? 2.0 : 1.0;
        case HeuristicKind::never_measure: return 0.0;
    }
    return 0.0;
}

}  // namespace measched
