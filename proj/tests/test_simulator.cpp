#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "measched/io.hpp"
#include "measched/simulator.hpp"
#include "support/oracles.hpp"

using namespace measched;

namespace {

SimConfig quiet_config() {
    SimConfig cfg;
    cfg.noise_enabled = false;
    cfg.missing_rate = 0.0;
    return cfg;
}

std::vector<std::uint8_t> bits_of(unsigned value, int width) {
    std::vector<std::uint8_t> s(width);
    for (int i = 0; i < width; ++i) s[i] = (value >> i) & 1u;
    return s;
}

}  // namespace

TEST_CASE("absorbing healthy state never produces an event") {
    SimConfig cfg;
    cfg.p_h2c = 0.0;
    Rng rng(1);
    for (int rep = 0; rep < 20; ++rep) {
        const auto states = simulate_states(cfg, rng);
        CHECK(states.size() >= static_cast<std::size_t>(cfg.len_min));
        CHECK(states.size() <= static_cast<std::size_t>(cfg.len_max));
        CHECK(std::all_of(states.begin(), states.end(), [](auto s) { return s == 0; }));
        CHECK_FALSE(label_events(states, cfg).terminal_step.has_value());
    }
}

TEST_CASE("forced critical start with no recovery terminates at step 4") {
    SimConfig cfg;
    cfg.initial_state = 1;
    cfg.p_c2h = 0.0;
    Rng rng(2);
    const auto states = simulate_states(cfg, rng);
    REQUIRE(states.size() == 5);
    const auto ev = label_events(states, cfg);
    REQUIRE(ev.terminal_step.has_value());
    CHECK(*ev.terminal_step == 4);
}

TEST_CASE("empirical transition frequencies match the configured chain") {
    SimConfig cfg;
    cfg.p_h2c = 0.1;
    cfg.p_c2h = 0.3;
    cfg.terminal_run = 1000000;  // never stop early
    cfg.len_min = cfg.len_max = 20000;
    Rng rng(3);
    const auto s = simulate_states(cfg, rng);
    double from0 = 0, to1 = 0, from1 = 0, to0 = 0;
    for (std::size_t t = 1; t < s.size(); ++t) {
        if (s[t - 1] == 0) {
            ++from0;
            to1 += s[t];
        } else {
            ++from1;
            to0 += (s[t] == 0);
        }
    }
    CHECK(from0 >= 10000);
    CHECK(testing::within_binomial_sigma(to1, from0, 0.1));
    CHECK(testing::within_binomial_sigma(to0, from1, 0.3));
}

TEST_CASE("noise-free rows follow the generative law") {
    SimConfig cfg = quiet_config();
    Rng rng(4);
    SUBCASE("critical with Bernoulli forced to 1") {
        cfg.bernoulli_p = 1.0;
        const auto m = emit_measurements({1}, cfg, rng);
        CHECK(m.values == std::vector<double>{1, 1, 1, 0, 1, 0});
        CHECK(m.mask == std::vector<std::uint8_t>(6, 1));
    }
    SUBCASE("healthy with Bernoulli forced to 0") {
        cfg.bernoulli_p = 0.0;
        const auto m = emit_measurements({0}, cfg, rng);
        CHECK(m.values == std::vector<double>{-1, -1, -1, 0, 0, 0});
    }
}

TEST_CASE("noise-free channel structure holds on whole trajectories") {
    SimConfig cfg = quiet_config();
    Rng rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        const auto traj = simulate_trajectory(cfg, rng);
        for (std::size_t t = 0; t < traj.length(); ++t) {
            const double v = traj.value(t, 0);
            CHECK((v == 1.0 || v == -1.0));
            CHECK(traj.value(t, 1) == v);
            CHECK(traj.value(t, 2) == v);
            CHECK(v == (traj.states[t] ? 1.0 : -1.0));
            CHECK(traj.value(t, 3) == 0.0);
            CHECK(traj.value(t, 5) == 0.0);
            CHECK((traj.value(t, 4) == 0.0 || traj.value(t, 4) == 1.0));
        }
    }
}

TEST_CASE("missingness and Bernoulli rates match configuration") {
    SimConfig cfg;
    cfg.missing_rate = 0.3;
    cfg.noise_enabled = false;
    cfg.p_h2c = 0.0;
    Rng rng(6);
    std::vector<std::uint8_t> states(2000, 0);
    const auto m = emit_measurements(states, cfg, rng);
    REQUIRE(m.mask.size() == 12000);
    double missing = 0;
    for (std::size_t i = 0; i < m.mask.size(); ++i) {
        missing += (m.mask[i] == 0);
        if (m.mask[i] == 0) REQUIRE(m.values[i] == 0.0);
    }
    CHECK(testing::within_binomial_sigma(missing, 12000, 0.3));
}

TEST_CASE("label_events worked examples") {
    SimConfig cfg;
    SUBCASE("all zeros") {
        const auto ev = label_events(std::vector<std::uint8_t>(12, 0), cfg);
        CHECK_FALSE(ev.terminal_step);
        CHECK(std::all_of(ev.labels.begin(), ev.labels.end(), [](auto l) { return l == 0; }));
    }
    SUBCASE("run completes at the last index") {
        const auto ev = label_events({0, 1, 1, 1, 1, 1}, cfg);
        REQUIRE(ev.terminal_step);
        CHECK(*ev.terminal_step == 5);
        CHECK(ev.labels == std::vector<std::uint8_t>(6, 1));
    }
    SUBCASE("broken run") {
        std::vector<std::uint8_t> s = {1, 1, 1, 0};
        s.resize(24, 0);
        const auto ev = label_events(s, cfg);
        CHECK_FALSE(ev.terminal_step);
        CHECK(std::count(ev.labels.begin(), ev.labels.end(), 1) == 0);
    }
}

TEST_CASE("terminal rule agrees with brute force on every length-10 string") {
    SimConfig cfg;
    for (unsigned v = 0; v < (1u << 10); ++v) {
        const auto s = bits_of(v, 10);
        const auto ev = label_events(s, cfg);
        const auto expected = testing::brute_force_terminal(s, cfg.terminal_run);
        REQUIRE(ev.terminal_step == expected);
        for (int t = 0; t < 10; ++t) {
            const bool want = expected && t <= *expected && *expected - t <= cfg.label_horizon;
            REQUIRE(ev.labels[t] == (want ? 1 : 0));
        }
    }
}

TEST_CASE("simulated trajectories satisfy the trajectory invariants") {
    SimConfig cfg;
    cfg.p_h2c = 0.3;
    cfg.p_c2h = 0.2;
    Rng rng(8);
    for (int rep = 0; rep < 300; ++rep) {
        const auto traj = simulate_trajectory(cfg, rng);
        const auto expected = testing::brute_force_terminal(traj.states, cfg.terminal_run);
        REQUIRE(traj.terminal_step == expected);
        if (traj.terminal_step) {
            CHECK(*traj.terminal_step == static_cast<int>(traj.length()) - 1);
        }
        for (std::size_t i = 0; i < traj.mask.size(); ++i)
            if (!traj.mask[i]) REQUIRE(traj.values[i] == 0.0);
    }
}

TEST_CASE("generate_dataset is deterministic and thread independent") {
    SimConfig cfg;
    const auto a = generate_dataset(cfg, 300, 42, 1);
    const auto b = generate_dataset(cfg, 300, 42, 3);
    std::ostringstream sa, sb;
    write_dataset(sa, a);
    write_dataset(sb, b);
    CHECK(sa.str() == sb.str());
    CHECK(generate_dataset(cfg, 1, 42).size() == 1);
    CHECK_THROWS_AS(generate_dataset(cfg, 0, 42), ConfigError);
}

TEST_CASE("held-out dataset shares no trajectory with the training set") {
    SimConfig cfg;
    const auto train = generate_dataset(cfg, 5000, 1);
    const auto test = generate_dataset(cfg, 500, 2);
    std::set<std::vector<double>> seen;
    for (const auto& t : train.trajectories) seen.insert(t.values);
    for (const auto& t : test.trajectories) CHECK(seen.count(t.values) == 0);
}

TEST_CASE("invalid configurations are rejected") {
    SimConfig cfg;
    cfg.p_h2c = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SimConfig{};
    cfg.len_min = 10;
    cfg.len_max = 5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SimConfig{};
    cfg.n_channels = 3;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SimConfig{};
    cfg.terminal_run = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
