#include "measched/io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "measched/errors.hpp"

namespace measched {

using nlohmann::json;

json to_json(const SimConfig& c) {
    return {{"p_h2c", c.p_h2c},
            {"p_c2h", c.p_c2h},
            {"terminal_run", c.terminal_run},
            {"n_channels", c.n_channels},
            {"len_min", c.len_min},
            {"len_max", c.len_max},
            {"missing_rate", c.missing_rate},
            {"bernoulli_p", c.bernoulli_p},
            {"noise_enabled", c.noise_enabled},
            {"label_horizon", c.label_horizon},
            {"initial_state", c.initial_state},
            {"seed", c.seed}};
}

SimConfig sim_config_from_json(const json& j) {
    SimConfig c;
    c.p_h2c = j.at("p_h2c");
    c.p_c2h = j.at("p_c2h");
    c.terminal_run = j.at("terminal_run");
    c.n_channels = j.at("n_channels");
    c.len_min = j.at("len_min");
    c.len_max = j.at("len_max");
    c.missing_rate = j.at("missing_rate");
    c.bernoulli_p = j.at("bernoulli_p");
    c.noise_enabled = j.at("noise_enabled");
    c.label_horizon = j.at("label_horizon");
    c.initial_state = j.at("initial_state");
    c.seed = j.at("seed");
    c.validate();
    return c;
}

void write_dataset(std::ostream& out, const Dataset& data, const json& run_config) {
    const int K = data.config.n_channels;
    json header = {{"format", "measched-dataset"},
                   {"version", kDatasetFormatVersion},
                   {"seed", data.seed},
                   {"n", data.size()},
                   {"k", K},
                   {"simulator", to_json(data.config)}};
    if (!run_config.is_null()) header["run_config"] = run_config;
    out << header.dump() << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Trajectory& t = data.trajectories[i];
        json rec = {{"index", i},
                    {"states", t.states},
                    {"values", t.values},
                    {"mask", t.mask},
                    {"labels", t.labels},
                    {"terminal_step", t.terminal_step ? json(*t.terminal_step) : json(nullptr)}};
        out << rec.dump() << '\n';
    }
    if (!out) throw std::runtime_error("failed writing dataset");
}

void write_dataset(const std::string& path, const Dataset& data, const json& run_config) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_dataset(out, data, run_config);
}

Dataset read_dataset(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("dataset file is empty");
    const json header = json::parse(line);
    if (header.value("format", "") != "measched-dataset") throw ConfigError("not a measched dataset");
    if (header.at("version").get<int>() != kDatasetFormatVersion)
        throw ConfigError("unsupported dataset version " + header.at("version").dump());
    Dataset data;
    data.config = sim_config_from_json(header.at("simulator"));
    data.seed = header.at("seed");
    const std::size_t n = header.at("n");
    const int K = header.at("k");
    if (K != data.config.n_channels) throw ConfigError("dataset header channel count mismatch");
    data.trajectories.reserve(n);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json rec = json::parse(line);
        Trajectory t;
        t.n_channels = K;
        t.states = rec.at("states").get<std::vector<std::uint8_t>>();
        t.values = rec.at("values").get<std::vector<double>>();
        t.mask = rec.at("mask").get<std::vector<std::uint8_t>>();
        t.labels = rec.at("labels").get<std::vector<std::uint8_t>>();
        if (!rec.at("terminal_step").is_null()) t.terminal_step = rec.at("terminal_step").get<int>();
        const std::size_t T = t.states.size();
        if (T == 0 || t.values.size() != T * K || t.mask.size() != T * K || t.labels.size() != T)
            throw ConfigError("dataset record " + std::to_string(data.trajectories.size()) +
                              " has inconsistent shapes");
        data.trajectories.push_back(std::move(t));
    }
    if (data.trajectories.size() != n)
        throw ConfigError("dataset header promises " + std::to_string(n) + " trajectories, found " +
                          std::to_string(data.trajectories.size()));
    return data;
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
    return read_dataset(in);
}

}  // namespace measched
