#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "measched/cli.hpp"
#include "measched/config.hpp"
#include "measched/dqn.hpp"
#include "measched/nn.hpp"

namespace fs = std::filesystem;
using measched::run_cli;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "measched");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

/// Fresh scratch directory removed at scope exit.
struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name)
        : dir(fs::temp_directory_path() / ("measched_cli_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    std::string operator/(const std::string& f) const { return (dir / f).string(); }
};

}  // namespace

TEST_CASE("simulate writes a reproducible dataset and a summary") {
    Scratch s("simulate");
    const auto a = run({"--seed", "5", "--out", s / "a.jsonl", "simulate", "--n", "200"});
    REQUIRE(a.code == 0);
    const auto b = run({"--seed", "5", "--out", s / "b.jsonl", "simulate", "--n", "200"});
    REQUIRE(b.code == 0);
    CHECK(slurp(s / "a.jsonl") == slurp(s / "b.jsonl"));
    CHECK(count_lines(slurp(s / "a.jsonl")) == 201);

    std::istringstream summary(a.out);
    std::string line, key;
    double event_rate = -1.0;
    while (std::getline(summary, line)) {
        std::istringstream ls(line);
        ls >> key;
        if (key == "event_rate") ls >> event_rate;
    }
    CHECK(event_rate > 0.0);
    CHECK(event_rate < 1.0);
}

TEST_CASE("simulate rejects n = 0 and leaves no file") {
    Scratch s("simulate_zero");
    const auto r = run({"--out", s / "z.jsonl", "simulate", "--n", "0"});
    CHECK(r.code != 0);
    CHECK_FALSE(fs::exists(s / "z.jsonl"));
}

TEST_CASE("invalid configuration exits nonzero") {
    Scratch s("bad_config");
    {
        std::ofstream cfg(s / "cfg.json");
        cfg << R"({"simulator": {"p_h2c": 0.1, "no_such_key": 3}})";
    }
    CHECK(run({"--config", s / "cfg.json", "--out", s / "d.jsonl", "simulate", "--n", "5"}).code == 2);
    CHECK(run({"--gamma", "1.5", "--out", s / "d.jsonl", "simulate", "--n", "5"}).code == 2);
    CHECK(run({"--importance", "1,2", "--out", s / "d.jsonl", "simulate", "--n", "5"}).code == 2);
    CHECK(run({"simulate", "--bogus"}).code == 2);
    CHECK_FALSE(fs::exists(s / "d.jsonl"));
}

TEST_CASE("config file values apply and flags override them") {
    Scratch s("config_override");
    {
        std::ofstream cfg(s / "cfg.json");
        cfg << R"({"seed": 11, "simulator": {"len_min": 7, "len_max": 7}})";
    }
    REQUIRE(run({"--config", s / "cfg.json", "--out", s / "a.jsonl", "simulate", "--n", "3"}).code == 0);
    std::ifstream in(s / "a.jsonl");
    std::string header;
    std::getline(in, header);
    const auto h = nlohmann::json::parse(header);
    CHECK(h.at("seed") == 11);
    CHECK(h.at("simulator").at("len_max") == 7);

    REQUIRE(run({"--config", s / "cfg.json", "--seed", "12", "--out", s / "b.jsonl", "simulate", "--n", "3"}).code ==
            0);
    std::ifstream in2(s / "b.jsonl");
    std::getline(in2, header);
    CHECK(nlohmann::json::parse(header).at("seed") == 12);
}

TEST_CASE("train with zero steps writes the initialization and a header-only curve") {
    Scratch s("train_zero");
    REQUIRE(run({"--out", s / "d.jsonl", "simulate", "--n", "10"}).code == 0);
    const auto r = run({"--train-steps", "0", "--gamma", "0", "--out", s / "run", "train", "--dataset", s / "d.jsonl"});
    REQUIRE(r.code == 0);
    CHECK(slurp(s / "run/learning_curve.csv") == "step,loss,epsilon,mean_return\n");
    const auto ckpt = measched::nn::load_checkpoint(s / "run/checkpoint.bin");
    CHECK(ckpt.metadata.at("dqn").at("gamma") == 0.0);
    CHECK(ckpt.metadata.at("run").at("config").at("environment").at("gamma") == 0.0);
    CHECK(ckpt.metadata.at("updates") == 0);

    measched::DqnConfig dc;
    dc.gamma = 0.0;
    dc.seed = measched::RunConfig{}.seed;
    const measched::DqnAgent fresh(30, 6, dc);
    CHECK(ckpt.network.same_parameters(fresh.online()));
    CHECK(fs::exists(s / "run/train_run.json"));
}

TEST_CASE("train, evaluate and trace end to end") {
    Scratch s("pipeline");
    REQUIRE(run({"--seed", "3", "--out", s / "train.jsonl", "simulate", "--n", "30"}).code == 0);
    REQUIRE(run({"--seed", "4", "--out", s / "test.jsonl", "simulate", "--n", "20"}).code == 0);
    for (const char* name : {"run1", "run2"})
        REQUIRE(run({"--train-steps", "300", "--out", s / name, "train", "--dataset", s / "train.jsonl"}).code == 0);
    CHECK(slurp(s / "run1/checkpoint.bin") == slurp(s / "run2/checkpoint.bin"));
    CHECK(slurp(s / "run1/learning_curve.csv") == slurp(s / "run2/learning_curve.csv"));

    SUBCASE("baselines only gives eight rows") {
        REQUIRE(run({"--out", s / "ev", "evaluate", "--dataset", s / "test.jsonl"}).code == 0);
        CHECK(count_lines(slurp(s / "ev/table.csv")) == 9);
        const auto report = nlohmann::json::parse(slurp(s / "ev/report.json"));
        CHECK(report.at("policies").size() == 8);
        CHECK(report.contains("config"));
    }
    SUBCASE("evaluation is byte reproducible") {
        for (const char* name : {"e1", "e2"})
            REQUIRE(run({"--out", s / name, "evaluate", "--dataset", s / "test.jsonl", "--checkpoint",
                         s / "run1/checkpoint.bin"})
                        .code == 0);
        CHECK(slurp(s / "e1/table.csv") == slurp(s / "e2/table.csv"));
        CHECK(slurp(s / "e1/report.json") == slurp(s / "e2/report.json"));
        CHECK(count_lines(slurp(s / "e1/table.csv")) == 10);
    }
    SUBCASE("explicit baselines and checkpoints only") {
        REQUIRE(run({"--out", s / "e3", "evaluate", "--dataset", s / "test.jsonl", "--baseline", "F1_alone",
                     "--baseline", "F3_alone"})
                    .code == 0);
        CHECK(count_lines(slurp(s / "e3/table.csv")) == 3);
        REQUIRE(run({"--out", s / "e4", "evaluate", "--dataset", s / "test.jsonl", "--no-baselines", "--checkpoint",
                     s / "run1/checkpoint.bin"})
                    .code == 0);
        CHECK(count_lines(slurp(s / "e4/table.csv")) == 2);
        CHECK(run({"--out", s / "e5", "evaluate", "--dataset", s / "test.jsonl", "--baseline", "nope"}).code == 2);
    }
    SUBCASE("never_measure trace has all-zero actions") {
        REQUIRE(run({"--out", s / "t.jsonl", "trace", "--dataset", s / "test.jsonl", "--index", "1", "--policy",
                     "never_measure"})
                    .code == 0);
        std::ifstream in(s / "t.jsonl");
        std::string line;
        std::getline(in, line);
        CHECK(nlohmann::json::parse(line).at("kind") == "trace-header");
        std::size_t rows = 0;
        while (std::getline(in, line)) {
            const auto j = nlohmann::json::parse(line);
            CHECK(j.at("action") == std::vector<int>(6, 0));
            ++rows;
        }
        CHECK(rows > 0);
    }
    SUBCASE("DQN trace runs") {
        REQUIRE(run({"--out", s / "q.jsonl", "trace", "--dataset", s / "test.jsonl", "--checkpoint",
                     s / "run1/checkpoint.bin"})
                    .code == 0);
        CHECK(count_lines(slurp(s / "q.jsonl")) > 1);
    }
    SUBCASE("trace to a directory fails") {
        fs::create_directories(s / "adir");
        const auto r = run({"--out", s / "adir", "trace", "--dataset", s / "test.jsonl", "--policy", "F1_alone"});
        CHECK(r.code != 0);
        CHECK_FALSE(r.err.empty());
    }
    SUBCASE("trace index out of range") {
        CHECK(run({"--out", s / "x.jsonl", "trace", "--dataset", s / "test.jsonl", "--index", "99", "--policy",
                   "F1_alone"})
                  .code != 0);
    }
}

TEST_CASE("missing dataset is a runtime failure") {
    Scratch s("missing");
    const auto r = run({"--out", s / "run", "train", "--dataset", s / "nope.jsonl"});
    CHECK(r.code == 1);
}
