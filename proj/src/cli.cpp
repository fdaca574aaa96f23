#include "measched/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "measched/baselines.hpp"
#include "measched/config.hpp"
#include "measched/dqn.hpp"
#include "measched/errors.hpp"
#include "measched/evaluation.hpp"
#include "measched/io.hpp"

namespace measched {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string out;
    std::optional<double> gamma;
    std::optional<double> lambda;
    std::optional<double> epsilon_start;
    std::optional<double> epsilon_end;
    std::optional<double> epsilon_decay;
    std::optional<std::size_t> train_steps;
    std::string importance;
    std::string cost;
};

RunConfig resolve_config(const CommonOptions& o) {
    std::string path = o.config_path;
    if (path.empty())
        if (const char* env = std::getenv(kConfigEnvVar)) path = env;
    RunConfig cfg = path.empty() ? RunConfig{} : load_run_config(path);
    if (o.seed) cfg.seed = *o.seed;
    if (o.threads) cfg.threads = *o.threads;
    if (o.gamma) cfg.environment.gamma = *o.gamma;
    if (o.lambda) cfg.environment.lambda = *o.lambda;
    if (o.epsilon_start) cfg.dqn.epsilon_start = *o.epsilon_start;
    if (o.epsilon_end) cfg.dqn.epsilon_end = *o.epsilon_end;
    if (o.epsilon_decay) cfg.dqn.epsilon_decay_fraction = *o.epsilon_decay;
    if (o.train_steps) cfg.dqn.train_steps = *o.train_steps;
    if (!o.importance.empty()) cfg.oracle.importance = parse_vector(o.importance);
    if (!o.cost.empty()) cfg.environment.cost = parse_vector(o.cost);
    cfg.sync();
    cfg.validate();
    return cfg;
}

/// Writes to a sibling temp file and renames it into place, so a failed
/// command never leaves a partial artifact at `path`.
void write_atomically(const fs::path& path, const std::function<void(std::ostream&)>& fill) {
    if (fs::is_directory(path)) throw std::runtime_error("output path '" + path.string() + "' is a directory");
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
        fill(out);
        out.flush();
        if (!out) throw std::runtime_error("failed writing '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

fs::path output_dir(const CommonOptions& o, const RunConfig& cfg) {
    const fs::path dir = o.out.empty() ? fs::path(cfg.output_dir) : fs::path(o.out);
    if (fs::exists(dir) && !fs::is_directory(dir))
        throw std::runtime_error("output path '" + dir.string() + "' exists and is not a directory");
    fs::create_directories(dir);
    return dir;
}

void check_dataset(const Dataset& data, const RunConfig& cfg) {
    if (data.config.n_channels != cfg.simulator.n_channels)
        throw ConfigError("dataset has " + std::to_string(data.config.n_channels) +
                          " channels but the config expects " + std::to_string(cfg.simulator.n_channels));
}

PairReading pair_reading(const RunConfig& cfg) {
    return cfg.evaluation.pair_reading == "random_one" ? PairReading::random_one : PairReading::fixed_pair;
}

int cmd_simulate(const CommonOptions& o, std::size_t n, std::ostream& out) {
    RunConfig cfg = resolve_config(o);
    if (n == 0) throw CLI::ValidationError("--n", "must be >= 1");
    const fs::path path = o.out.empty() ? fs::path(cfg.output_dir) / "dataset.jsonl" : fs::path(o.out);
    const Dataset data = generate_dataset(cfg.simulator, n, cfg.seed, cfg.threads);
    write_atomically(path, [&](std::ostream& s) { write_dataset(s, data, to_json(cfg)); });
    const auto sum = summarize(data);
    out << std::fixed << std::setprecision(4) << "wrote " << n << " trajectories to " << path.string() << '\n'
        << "mean_length " << sum.mean_length << '\n'
        << "event_rate " << sum.event_rate << '\n'
        << "missing_fraction " << sum.missing_fraction << '\n'
        << "critical_fraction " << sum.critical_fraction << '\n';
    return 0;
}

int cmd_train(const CommonOptions& o, const std::string& dataset_path, std::ostream& out) {
    RunConfig cfg = resolve_config(o);
    const Dataset data = read_dataset(dataset_path);
    check_dataset(data, cfg);
    const fs::path dir = output_dir(o, cfg);

    DqnAgent agent(state_dim(cfg.environment, cfg.oracle), cfg.simulator.n_channels, cfg.dqn);
    const TrainResult result = train(agent, data, cfg.environment, cfg.oracle);

    const json run = {{"config", to_json(cfg)}, {"dataset_seed", data.seed}, {"dataset_size", data.size()}};
    const fs::path ckpt = dir / "checkpoint.bin";
    write_atomically(ckpt, [&](std::ostream& s) {
        auto meta = agent.metadata();
        meta["run"] = run;
        nn::save_checkpoint(s, agent.online(), meta);
    });
    write_atomically(dir / "learning_curve.csv", [&](std::ostream& s) { write_curve_csv(s, result.curve); });
    write_atomically(dir / "train_run.json", [&](std::ostream& s) {
        json manifest = run;
        manifest["command"] = "train";
        manifest["artifacts"] = {"checkpoint.bin", "learning_curve.csv"};
        manifest["episodes"] = result.episodes;
        manifest["env_steps"] = result.env_steps;
        s << manifest.dump(2) << '\n';
    });
    out << "trained " << result.env_steps << " steps over " << result.episodes << " episodes (gamma "
        << cfg.dqn.gamma << ")\n"
        << "wrote " << ckpt.string() << '\n';
    return 0;
}

int cmd_evaluate(const CommonOptions& o, const std::string& dataset_path,
                 const std::vector<std::string>& checkpoints, std::vector<std::string> baselines,
                 bool no_baselines, std::ostream& out) {
    RunConfig cfg = resolve_config(o);
    const Dataset data = read_dataset(dataset_path);
    check_dataset(data, cfg);
    const fs::path dir = output_dir(o, cfg);
    if (baselines.empty() && !no_baselines) baselines = cfg.evaluation.baselines;
    if (no_baselines) baselines.clear();
    if (checkpoints.empty() && baselines.empty()) throw CLI::ValidationError("evaluate", "no policies to evaluate");

    std::vector<std::unique_ptr<Policy>> policies;
    for (const auto& path : checkpoints) {
        const DqnAgent agent = DqnAgent::load(path);
        if (agent.n_channels() != static_cast<std::size_t>(cfg.simulator.n_channels) ||
            agent.state_dim() != state_dim(cfg.environment, cfg.oracle))
            throw ConfigError("checkpoint '" + path + "' does not match the configured state layout");
        const std::string label = checkpoints.size() == 1 ? "DQN" : "DQN:" + fs::path(path).stem().string();
        policies.push_back(std::make_unique<DqnPolicy>(agent.online(), agent.n_channels(), 0.0, label));
    }
    for (const auto& name : baselines)
        policies.push_back(std::make_unique<HeuristicPolicy>(heuristic_from_string(name),
                                                             cfg.simulator.n_channels, pair_reading(cfg)));

    EvalReport report;
    report.config = to_json(cfg);
    report.policy_seed = cfg.seed;
    report.dataset_seed = data.seed;
    for (const auto& p : policies)
        report.policies.push_back(evaluate(*p, data, cfg.environment, cfg.oracle, cfg.seed, cfg.threads));

    write_atomically(dir / "table.csv", [&](std::ostream& s) { write_table_csv(s, report.policies); });
    write_atomically(dir / "report.json", [&](std::ostream& s) {
        json j = to_json(report);
        j["checkpoints"] = checkpoints;
        s << j.dump(2) << '\n';
    });
    for (const auto& r : report.policies)
        out << std::left << std::setw(16) << r.policy << std::right << std::fixed << std::setprecision(3)
            << std::setw(10) << r.mean_reward << " +/- " << r.stderr_reward << '\n';
    return 0;
}

int cmd_trace(const CommonOptions& o, const std::string& dataset_path, const std::string& checkpoint,
              const std::string& policy_name, std::size_t index, std::ostream& out) {
    RunConfig cfg = resolve_config(o);
    if (o.out.empty()) throw CLI::ValidationError("--out", "trace needs an output file");
    const fs::path path(o.out);
    if (fs::is_directory(path)) throw std::runtime_error("output path '" + path.string() + "' is a directory");
    if (checkpoint.empty() == policy_name.empty())
        throw CLI::ValidationError("trace", "give exactly one of --checkpoint or --policy");
    const Dataset data = read_dataset(dataset_path);
    check_dataset(data, cfg);
    if (index >= data.size())
        throw CLI::ValidationError("--index", "trajectory index " + std::to_string(index) + " out of range");

    std::unique_ptr<Policy> policy;
    if (!checkpoint.empty()) {
        const DqnAgent agent = DqnAgent::load(checkpoint);
        policy = std::make_unique<DqnPolicy>(agent.online(), agent.n_channels());
    } else {
        policy = std::make_unique<HeuristicPolicy>(heuristic_from_string(policy_name), cfg.simulator.n_channels,
                                                   pair_reading(cfg));
    }
    Rng rng = Rng(cfg.seed).split(index);
    const auto trace = trace_policy(*policy, data.trajectories[index], cfg.environment, cfg.oracle, rng);
    write_atomically(path, [&](std::ostream& s) {
        json header = {{"kind", "trace-header"},
                       {"policy", policy->name()},
                       {"trajectory_index", index},
                       {"dataset_seed", data.seed},
                       {"config", to_json(cfg)}};
        s << header.dump() << '\n';
        write_trace_jsonl(s, trace);
    });
    out << "wrote " << trace.size() << " trace rows to " << path.string() << '\n';
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cost-aware measurement scheduling: simulate, train, evaluate, trace", "measched"};
    app.require_subcommand(1);
    app.fallthrough();

    CommonOptions o;
    app.add_option("--config", o.config_path,
                   std::string("JSON run config (default: $") + kConfigEnvVar + ")");
    app.add_option("--seed", o.seed, "Global seed");
    app.add_option("--threads", o.threads, "Worker thread cap");
    app.add_option("--out", o.out, "Output file (simulate, trace) or directory (train, evaluate)");
    app.add_option("--gamma", o.gamma, "Discount factor");
    app.add_option("--lambda", o.lambda, "Gain weight");
    app.add_option("--epsilon-start", o.epsilon_start, "Initial exploration rate");
    app.add_option("--epsilon-end", o.epsilon_end, "Final exploration rate");
    app.add_option("--epsilon-decay", o.epsilon_decay, "Fraction of training over which epsilon decays");
    app.add_option("--train-steps", o.train_steps, "Environment steps to train for");
    app.add_option("--importance", o.importance, "Oracle importance vector, e.g. 1,2,4,0,0,0");
    app.add_option("--cost", o.cost, "Per-channel cost vector, e.g. 1,1,1,1,1,1");

    std::size_t n = 0;
    bool n_given = false;
    auto* sim = app.add_subcommand("simulate", "Generate and serialize a trajectory dataset");
    auto* n_opt = sim->add_option("--n", n, "Number of trajectories (default: evaluation.train_trajectories)");

    std::string dataset;
    auto* train_cmd = app.add_subcommand("train", "Train the dueling DQN scheduler");
    train_cmd->add_option("--dataset", dataset, "Training dataset file")->required();

    std::vector<std::string> checkpoints, baselines;
    bool no_baselines = false;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score policies on a held-out dataset");
    eval_cmd->add_option("--dataset", dataset, "Evaluation dataset file")->required();
    eval_cmd->add_option("--checkpoint", checkpoints, "DQN checkpoint(s) to evaluate");
    eval_cmd->add_option("--baseline", baselines, "Baseline name(s); default: evaluation.baselines");
    eval_cmd->add_flag("--no-baselines", no_baselines, "Evaluate checkpoints only");

    std::string checkpoint, policy_name;
    std::size_t index = 0;
    auto* trace_cmd = app.add_subcommand("trace", "Write a per-step policy trace for one trajectory");
    trace_cmd->add_option("--dataset", dataset, "Dataset file")->required();
    trace_cmd->add_option("--index", index, "Trajectory index");
    trace_cmd->add_option("--checkpoint", checkpoint, "DQN checkpoint");
    trace_cmd->add_option("--policy", policy_name, "Baseline name");

    try {
        app.parse(argc, argv);
        n_given = n_opt->count() > 0;
        if (sim->parsed()) {
            if (!n_given) n = resolve_config(o).evaluation.train_trajectories;
            return cmd_simulate(o, n, out);
        }
        if (train_cmd->parsed()) return cmd_train(o, dataset, out);
        if (eval_cmd->parsed()) return cmd_evaluate(o, dataset, checkpoints, baselines, no_baselines, out);
        if (trace_cmd->parsed()) return cmd_trace(o, dataset, checkpoint, policy_name, index, out);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace measched
