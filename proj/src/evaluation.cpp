#include "measched/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "measched/errors.hpp"
#include "measched/parallel.hpp"

namespace measched {

namespace {

struct EpisodeTally {
    double reward = 0.0;
    std::size_t steps = 0;
    std::vector<std::size_t> healthy_counts;
    std::vector<std::size_t> critical_counts;
    std::size_t healthy_steps = 0;
    std::size_t critical_steps = 0;
};

}  // namespace

PolicyReport evaluate(const Policy& policy, const Dataset& data, const EnvConfig& env_cfg,
                      const OracleConfig& oracle_cfg, std::uint64_t seed, unsigned threads) {
    if (data.trajectories.empty()) throw ConfigError("evaluation dataset is empty");
    const std::size_t n = data.size();
    const int K = data.trajectories.front().n_channels;
    std::vector<EpisodeTally> tallies(n);
    const Rng root(seed);

    parallel_for(n, threads, [&](std::size_t i) {
        const Trajectory& traj = data.trajectories[i];
        MeasurementEnv env(traj, env_cfg, oracle_cfg);
        Rng rng = root.split(i);
        const RolloutResult r = rollout(env, policy, rng);
        EpisodeTally& tally = tallies[i];
        tally.reward = r.accumulated_reward;
        tally.steps = r.records.size();
        tally.healthy_counts.assign(K, 0);
        tally.critical_counts.assign(K, 0);
        for (std::size_t t = 0; t < r.records.size(); ++t) {
            const bool critical = traj.states[t] != 0;
            auto& counts = critical ? tally.critical_counts : tally.healthy_counts;
            (critical ? tally.critical_steps : tally.healthy_steps)++;
            for (int k = 0; k < K; ++k) counts[k] += r.records[t].action[k];
        }
    });

    PolicyReport rep;
    rep.policy = policy.name();
    rep.episodes = n;
    std::vector<std::size_t> healthy(K, 0), critical(K, 0);
    for (const auto& tally : tallies) {
        rep.returns.push_back(tally.reward);
        rep.steps += tally.steps;
        rep.healthy_steps += tally.healthy_steps;
        rep.critical_steps += tally.critical_steps;
        for (int k = 0; k < K; ++k) {
            healthy[k] += tally.healthy_counts[k];
            critical[k] += tally.critical_counts[k];
        }
    }
    rep.mean_reward = std::accumulate(rep.returns.begin(), rep.returns.end(), 0.0) / static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (double r : rep.returns) ss += (r - rep.mean_reward) * (r - rep.mean_reward);
        rep.stderr_reward = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
    }
    auto frac = [](std::size_t num, std::size_t den) {
        return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
    };
    for (int k = 0; k < K; ++k) {
        rep.selection.push_back(frac(healthy[k] + critical[k], rep.steps));
        rep.selection_healthy.push_back(frac(healthy[k], rep.healthy_steps));
        rep.selection_critical.push_back(frac(critical[k], rep.critical_steps));
    }
    return rep;
}

std::vector<TraceStep> trace_policy(const Policy& policy, const Trajectory& trajectory,
                                    const EnvConfig& env_cfg, const OracleConfig& oracle_cfg, Rng& rng) {
    MeasurementEnv env(trajectory, env_cfg, oracle_cfg);
    std::vector<TraceStep> trace;
    auto state = env.reset();
    while (!env.done()) {
        TraceStep row;
        row.t = env.time();
        row.hidden_state = trajectory.states[row.t];
        row.label = trajectory.labels[row.t];
        row.action = policy.act(state, rng);
        StepResult out = env.step(row.action);
        row.rewards = out.rewards;
        row.probability = predict(env.window(), oracle_cfg);
        state = std::move(out.next_state);
        trace.push_back(std::move(row));
    }
    return trace;
}

std::vector<int> rank_features(const PolicyReport& report) {
    std::vector<int> order(report.selection.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return report.selection[a] > report.selection[b]; });
    return order;
}

void write_table_csv(std::ostream& out, const std::vector<PolicyReport>& reports) {
    const std::size_t K = reports.empty() ? 0 : reports.front().selection.size();
    out << "policy,mean_reward,stderr,episodes,steps";
    for (std::size_t k = 0; k < K; ++k) out << ",freq_F" << (k + 1);
    out << '\n';
    char buf[64];
    for (const auto& r : reports) {
        out << r.policy;
        std::snprintf(buf, sizeof buf, ",%.6f,%.6f", r.mean_reward, r.stderr_reward);
        out << buf << ',' << r.episodes << ',' << r.steps;
        for (double f : r.selection) {
            std::snprintf(buf, sizeof buf, ",%.6f", f);
            out << buf;
        }
        out << '\n';
    }
}

nlohmann::json to_json(const PolicyReport& r) {
    std::vector<int> ranking;
    for (int k : rank_features(r)) ranking.push_back(k + 1);
    return {{"policy", r.policy},
            {"episodes", r.episodes},
            {"steps", r.steps},
            {"mean_reward", r.mean_reward},
            {"stderr", r.stderr_reward},
            {"selection", r.selection},
            {"selection_healthy", r.selection_healthy},
            {"selection_critical", r.selection_critical},
            {"healthy_steps", r.healthy_steps},
            {"critical_steps", r.critical_steps},
            {"feature_ranking", ranking},
            {"returns", r.returns}};
}

nlohmann::json to_json(const EvalReport& report) {
    nlohmann::json policies = nlohmann::json::array();
    for (const auto& p : report.policies) policies.push_back(to_json(p));
    return {{"config", report.config},
            {"policy_seed", report.policy_seed},
            {"dataset_seed", report.dataset_seed},
            {"policies", policies}};
}

void write_trace_jsonl(std::ostream& out, const std::vector<TraceStep>& trace) {
    for (const auto& row : trace) {
        nlohmann::json j;
        j["t"] = row.t;
        j["hidden_state"] = row.hidden_state;
        j["label"] = row.label;
        j["action"] = row.action.bits;
        j["rewards"] = row.rewards;
        j["probability"] = row.probability;
        out << j.dump() << '\n';
    }
}

}  // namespace measched
