// Experiment CLI: train / sweep / evaluate over key-value config files.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "calibra/calibra.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config file")->required();
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", args.seed, "seed override");
    cmd->add_option("--threads", args.threads, "worker threads (overrides config)")->envname("CALIBRA_THREADS");
}

calibra::cli::ExperimentConfig load(const CommonArgs& args) {
    auto cfg = calibra::cli::parse_config_file(args.config_path);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.seed >= 0) {
        cfg.train.seed = static_cast<std::uint64_t>(args.seed);
        cfg.seeds = {cfg.train.seed};
    }
    if (args.threads > 0) cfg.threads = args.threads;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"calibration-aware Bayesian neural network experiments"};
    app.require_subcommand(1);

    CommonArgs train_args, sweep_args, eval_args;
    std::string checkpoint_path;

    CLI::App* train_cmd = app.add_subcommand("train", "train one model and write log, calibration and checkpoint files");
    add_common(train_cmd, train_args);
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run the lambda x seed grid and write one combined table");
    add_common(sweep_cmd, sweep_args);
    CLI::App* eval_cmd = app.add_subcommand("evaluate", "re-evaluate a posterior checkpoint on the config's test split");
    add_common(eval_cmd, eval_args);
    eval_cmd->add_option("--checkpoint", checkpoint_path, "posterior checkpoint file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return calibra::cli::cmd_train(load(train_args));
        if (sweep_cmd->parsed()) return calibra::cli::cmd_sweep(load(sweep_args));
        if (eval_cmd->parsed()) return calibra::cli::cmd_evaluate(load(eval_args), checkpoint_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
