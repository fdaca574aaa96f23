#include "measched/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "measched/baselines.hpp"
#include "measched/errors.hpp"
#include "measched/io.hpp"

namespace measched {

using nlohmann::json;

namespace {

/// Reads optional keys from one config section and rejects the rest.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        known_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("config key '" + name_ + "." + key + "': " + e.what());
        }
    }

    const json* child(const char* key) {
        known_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& item : j_.items())
            if (!known_.count(item.key()))
                throw ConfigError("unknown config key '" + (name_.empty() ? "" : name_ + ".") + item.key() + "'");
    }

private:
    const json& j_;
    std::string name_;
    std::set<std::string> known_;
};

}  // namespace

void RunConfig::validate() const {
    simulator.validate();
    oracle.validate_for(simulator.n_channels);
    environment.validate_for(simulator.n_channels);
    dqn.validate();
    if (threads == 0) throw ConfigError("threads must be >= 1");
    if (evaluation.train_trajectories == 0 || evaluation.test_trajectories == 0)
        throw ConfigError("evaluation trajectory counts must be >= 1");
    if (evaluation.pair_reading != "fixed_pair" && evaluation.pair_reading != "random_one")
        throw ConfigError("evaluation.pair_reading must be 'fixed_pair' or 'random_one'");
    for (const auto& b : evaluation.baselines) heuristic_from_string(b);
}

void RunConfig::sync() {
    simulator.seed = seed;
    dqn.seed = seed;
    dqn.gamma = environment.gamma;
}

RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    Section top(j, "");
    top.get("seed", c.seed);
    top.get("output_dir", c.output_dir);
    top.get("threads", c.threads);
    if (const json* s = top.child("simulator")) {
        Section sec(*s, "simulator");
        auto& x = c.simulator;
        sec.get("p_h2c", x.p_h2c);
        sec.get("p_c2h", x.p_c2h);
        sec.get("terminal_run", x.terminal_run);
        sec.get("n_channels", x.n_channels);
        sec.get("len_min", x.len_min);
        sec.get("len_max", x.len_max);
        sec.get("missing_rate", x.missing_rate);
        sec.get("bernoulli_p", x.bernoulli_p);
        sec.get("noise_enabled", x.noise_enabled);
        sec.get("label_horizon", x.label_horizon);
        sec.get("initial_state", x.initial_state);
        sec.finish();
    }
    if (const json* s = top.child("oracle")) {
        Section sec(*s, "oracle");
        sec.get("importance", c.oracle.importance);
        sec.get("window_len", c.oracle.window_len);
        sec.finish();
    }
    if (const json* s = top.child("environment")) {
        Section sec(*s, "environment");
        sec.get("lambda", c.environment.lambda);
        sec.get("gamma", c.environment.gamma);
        sec.get("cost", c.environment.cost);
        sec.get("append_mask", c.environment.append_mask);
        sec.finish();
    }
    if (const json* s = top.child("dqn")) {
        Section sec(*s, "dqn");
        auto& d = c.dqn;
        sec.get("hidden", d.hidden);
        sec.get("epsilon_start", d.epsilon_start);
        sec.get("epsilon_end", d.epsilon_end);
        sec.get("epsilon_decay_fraction", d.epsilon_decay_fraction);
        sec.get("replay_capacity", d.replay_capacity);
        sec.get("batch_size", d.batch_size);
        sec.get("target_sync_interval", d.target_sync_interval);
        sec.get("train_steps", d.train_steps);
        sec.get("log_interval", d.log_interval);
        sec.get("return_window", d.return_window);
        sec.get("learning_rate", d.adam.learning_rate);
        sec.get("beta1", d.adam.beta1);
        sec.get("beta2", d.adam.beta2);
        sec.get("adam_epsilon", d.adam.epsilon);
        sec.finish();
    }
    if (const json* s = top.child("evaluation")) {
        Section sec(*s, "evaluation");
        auto& e = c.evaluation;
        sec.get("train_trajectories", e.train_trajectories);
        sec.get("test_trajectories", e.test_trajectories);
        sec.get("test_seed_offset", e.test_seed_offset);
        sec.get("baselines", e.baselines);
        sec.get("pair_reading", e.pair_reading);
        sec.finish();
    }
    top.finish();
    c.sync();
    c.validate();
    return c;
}

json to_json(const RunConfig& c) {
    json sim = to_json(c.simulator);
    sim.erase("seed");
    const auto& d = c.dqn;
    return {{"seed", c.seed},
            {"output_dir", c.output_dir},
            {"threads", c.threads},
            {"simulator", sim},
            {"oracle", {{"importance", c.oracle.importance}, {"window_len", c.oracle.window_len}}},
            {"environment",
             {{"lambda", c.environment.lambda},
              {"gamma", c.environment.gamma},
              {"cost", c.environment.cost},
              {"append_mask", c.environment.append_mask}}},
            {"dqn",
             {{"hidden", d.hidden},
              {"epsilon_start", d.epsilon_start},
              {"epsilon_end", d.epsilon_end},
              {"epsilon_decay_fraction", d.epsilon_decay_fraction},
              {"replay_capacity", d.replay_capacity},
              {"batch_size", d.batch_size},
              {"target_sync_interval", d.target_sync_interval},
              {"train_steps", d.train_steps},
              {"log_interval", d.log_interval},
              {"return_window", d.return_window},
              {"learning_rate", d.adam.learning_rate},
              {"beta1", d.adam.beta1},
              {"beta2", d.adam.beta2},
              {"adam_epsilon", d.adam.epsilon}}},
            {"evaluation",
             {{"train_trajectories", c.evaluation.train_trajectories},
              {"test_trajectories", c.evaluation.test_trajectories},
              {"test_seed_offset", c.evaluation.test_seed_offset},
              {"baselines", c.evaluation.baselines},
              {"pair_reading", c.evaluation.pair_reading}}}};
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

std::vector<double> parse_vector(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("cannot parse '" + item + "' as a number in '" + text + "'");
        }
    }
    if (out.empty()) throw ConfigError("empty vector '" + text + "'");
    return out;
}

}  // namespace measched
