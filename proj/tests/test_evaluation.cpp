#include <doctest.h>

#include <numeric>
#include <sstream>

#include "measched/baselines.hpp"
#include "measched/evaluation.hpp"

using namespace measched;

namespace {

Dataset eval_data(std::size_t n = 60, std::uint64_t seed = 21) {
    SimConfig cfg;
    cfg.p_h2c = 0.2;
    return generate_dataset(cfg, n, seed);
}

double mean_length(const Dataset& data) {
    double total = 0.0;
    for (const auto& t : data.trajectories) total += static_cast<double>(t.length());
    return total / static_cast<double>(data.size());
}

}  // namespace

TEST_CASE("never_measure scores exactly zero with zero spread") {
    const auto data = eval_data();
    const auto rep = evaluate(HeuristicPolicy(HeuristicKind::never_measure, 6), data, EnvConfig{},
                              OracleConfig{}, 1);
    CHECK(rep.mean_reward == 0.0);
    CHECK(rep.stderr_reward == 0.0);
    CHECK(rep.episodes == data.size());
    CHECK(rep.selection == std::vector<double>(6, 0.0));
}

TEST_CASE("with lambda zero every heuristic pays channels-per-step times the mean length") {
    const auto data = eval_data();
    EnvConfig env;
    env.lambda = 0.0;
    const double len = mean_length(data);
    for (auto reading : {PairReading::fixed_pair, PairReading::random_one}) {
        for (auto kind : all_heuristics()) {
            const HeuristicPolicy p(kind, 6, reading);
            const auto rep = evaluate(p, data, env, OracleConfig{}, 2);
            CHECK(std::abs(rep.mean_reward + p.channels_per_step() * len) < 1e-9);
        }
    }
}

TEST_CASE("reported mean is the mean of environment rollout returns") {
    const auto data = eval_data();
    const HeuristicPolicy p(HeuristicKind::F1_3_random, 6);
    const auto rep = evaluate(p, data, EnvConfig{}, OracleConfig{}, 3);
    const Rng root(3);
    double sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        MeasurementEnv env(data.trajectories[i], EnvConfig{}, OracleConfig{});
        Rng rng = root.split(i);
        const double r = rollout(env, p, rng).accumulated_reward;
        CHECK(rep.returns[i] == r);
        sum += r;
    }
    CHECK(rep.mean_reward == sum / static_cast<double>(data.size()));
    std::size_t steps = 0;
    for (const auto& t : data.trajectories) steps += t.length();
    CHECK(rep.steps == steps);
    CHECK(rep.healthy_steps + rep.critical_steps == steps);
}

TEST_CASE("evaluation is deterministic and independent of thread count") {
    const auto data = eval_data(80);
    const HeuristicPolicy p(HeuristicKind::F1_3_random, 6);
    const auto a = evaluate(p, data, EnvConfig{}, OracleConfig{}, 4, 1);
    const auto b = evaluate(p, data, EnvConfig{}, OracleConfig{}, 4, 4);
    CHECK(a.returns == b.returns);
    std::ostringstream sa, sb;
    write_table_csv(sa, {a});
    write_table_csv(sb, {b});
    CHECK(sa.str() == sb.str());
    CHECK(to_json(a).dump() == to_json(b).dump());
}

TEST_CASE("conditional selection frequencies") {
    const auto data = eval_data();
    const auto rep = evaluate(HeuristicPolicy(HeuristicKind::F2_3_alone, 6), data, EnvConfig{}, OracleConfig{}, 5);
    CHECK(rep.selection == std::vector<double>{0, 1, 1, 0, 0, 0});
    CHECK(rep.selection_healthy == std::vector<double>{0, 1, 1, 0, 0, 0});
    CHECK(rep.selection_critical == std::vector<double>{0, 1, 1, 0, 0, 0});
    CHECK(rep.critical_steps > 0);
}

TEST_CASE("rank_features orders by frequency with index tie-break") {
    PolicyReport r;
    r.selection = {0.0, 1.0, 0.0, 0.0, 0.0, 0.0};
    CHECK(rank_features(r) == std::vector<int>{1, 0, 2, 3, 4, 5});
    r.selection = {1.0 / 3, 1.0 / 3, 1.0 / 3, 0, 0, 0};
    CHECK(rank_features(r) == std::vector<int>{0, 1, 2, 3, 4, 5});
    r.selection = {0.2, 0.5, 0.9, 0.5, 0, 0.01};
    CHECK(rank_features(r) == std::vector<int>{2, 1, 3, 0, 5, 4});

    const auto data = eval_data();
    const auto rep = evaluate(HeuristicPolicy(HeuristicKind::F1_alone, 6), data, EnvConfig{}, OracleConfig{}, 6);
    CHECK(rank_features(rep).front() == 0);
    CHECK(rep.selection[0] == 1.0);
}

TEST_CASE("trace worked examples") {
    const auto data = eval_data(10);
    const auto& traj = data.trajectories[2];
    Rng rng(7);
    SUBCASE("never_measure keeps the forecast at one half") {
        const auto trace = trace_policy(HeuristicPolicy(HeuristicKind::never_measure, 6), traj, EnvConfig{},
                                        OracleConfig{}, rng);
        REQUIRE(trace.size() == traj.length());
        for (const auto& row : trace) {
            CHECK(row.action.count() == 0);
            CHECK(row.probability == 0.5);
        }
    }
    SUBCASE("F1_3_all requests the informative channels on every row") {
        const auto trace = trace_policy(HeuristicPolicy(HeuristicKind::F1_3_all, 6), traj, EnvConfig{},
                                        OracleConfig{}, rng);
        for (std::size_t t = 0; t < trace.size(); ++t) {
            CHECK(trace[t].t == t);
            CHECK(trace[t].action.bits == std::vector<std::uint8_t>{1, 1, 1, 0, 0, 0});
            CHECK(trace[t].hidden_state == traj.states[t]);
            CHECK(trace[t].label == traj.labels[t]);
        }
        std::ostringstream out;
        write_trace_jsonl(out, trace);
        std::size_t lines = 0;
        for (char c : out.str()) lines += c == '\n';
        CHECK(lines == trace.size());
    }
}

TEST_CASE("table csv layout") {
    PolicyReport r;
    r.policy = "F1_alone";
    r.mean_reward = -1.5;
    r.stderr_reward = 0.25;
    r.episodes = 2;
    r.steps = 40;
    r.selection = {1, 0, 0, 0, 0, 0};
    std::ostringstream out;
    write_table_csv(out, {r});
    CHECK(out.str() ==
          "policy,mean_reward,stderr,episodes,steps,freq_F1,freq_F2,freq_F3,freq_F4,freq_F5,freq_F6\n"
          "F1_alone,-1.500000,0.250000,2,40,1.000000,0.000000,0.000000,0.000000,0.000000,0.000000\n");
}
