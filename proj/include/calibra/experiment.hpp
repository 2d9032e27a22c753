#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "calibra/checkpoint.hpp"
#include "calibra/config.hpp"
#include "calibra/dataset.hpp"
#include "calibra/tables.hpp"
#include "calibra/training.hpp"

namespace calibra::cli {

struct BuiltData {
    data::Dataset train;
    data::Dataset test;
};

/// Data pipeline: source -> seeded split -> optional standardization with
/// train-split statistics. data_seed = 0 derives the dataset seed from the
/// run seed, so seed sweeps resample data and initialization together.
inline BuiltData build_data(const ExperimentConfig& cfg) {
    const std::uint64_t dseed =
        cfg.data.data_seed != 0 ? cfg.data.data_seed : rng::derive_seed(cfg.train.seed, {rng::kDataSynth});
    data::Dataset full;
    if (cfg.data.source == DataConfig::Source::kSynthetic) {
        full = data::synth_gaussian_blobs(cfg.data.synth_classes, cfg.data.synth_per_class, cfg.data.synth_dim,
                                          cfg.data.synth_separation, cfg.data.synth_noise, dseed);
    } else {
        full = data::load_csv(cfg.data.csv_path, cfg.data.csv_label_column, cfg.data.csv_classes);
    }
    auto [train, test] = data::split(full, cfg.data.test_fraction, dseed);
    if (cfg.data.standardize) data::standardize(train, test);
    return BuiltData{std::move(train), std::move(test)};
}

inline models::MlpSpec build_spec(const ExperimentConfig& cfg, const data::Dataset& ds) {
    models::MlpSpec spec{ds.dim(), cfg.hidden_dims, ds.class_count, cfg.activation};
    spec.validate();
    return spec;
}

struct RunOutput {
    models::MlpSpec spec;
    training::TrainResult result;
};

inline RunOutput run_single(const ExperimentConfig& cfg) {
    cfg.validate();
    BuiltData built = build_data(cfg);
    RunOutput out;
    out.spec = build_spec(cfg, built.train);
    out.result = training::train(out.spec, built.train, built.test, cfg.train);
    return out;
}

// ---- commands -------------------------------------------------------------

/// train: run one experiment, write the log, calibration summary,
/// reliability table, effective config and (for Bayesian objectives) the
/// posterior checkpoint; print final accuracy and ECE.
inline int cmd_train(const ExperimentConfig& cfg) {
    cfg.validate();
    RunOutput run = run_single(cfg);
    const std::filesystem::path out_dir = cfg.out_dir;
    std::filesystem::create_directories(out_dir);
    io::atomic_write(out_dir / "train_log.csv", io::train_log_csv(run.result.log));
    io::atomic_write(out_dir / "calibration.csv",
                     io::calibration_summary_csv(run.result.final_eval.report, run.result.final_eval.accuracy));
    io::atomic_write(out_dir / "reliability.csv", io::reliability_csv(run.result.final_eval.report));
    io::atomic_write(out_dir / "config.cfg", serialize_config(cfg));
    if (run.result.bayesian) {
        Checkpoint ckpt{run.spec, cfg.train.prior, cfg.train.seed, run.result.posterior};
        io::atomic_write(out_dir / "posterior.ckpt", encode_checkpoint(ckpt));
    }
    std::printf("final test accuracy = %.6f\n", run.result.final_eval.accuracy);
    std::printf("final test ECE = %.6f\n", run.result.final_eval.ece);
    return 0;
}

/// One sweep cell: the configured objective with (lambda, seed) substituted.
inline io::SweepRow run_sweep_cell(const ExperimentConfig& base, double lambda, std::uint64_t seed) {
    io::SweepRow row;
    row.objective = detail::objective_name(base.train.objective);
    row.lambda = lambda;
    row.seed = seed;
    try {
        ExperimentConfig cfg = base;
        cfg.train.lambda = lambda;
        cfg.train.seed = seed;
        RunOutput run = run_single(cfg);
        row.ok = true;
        row.accuracy = run.result.final_eval.accuracy;
        row.ece = run.result.final_eval.ece;
    } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
    }
    return row;
}

/// sweep: the lambda x seed grid in a bounded worker pool. Cells are fully
/// independent; the table is assembled in grid order regardless of
/// completion order. Failed cells are recorded as NA and the sweep goes on.
inline int cmd_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.sweep_lambdas.empty()) throw std::invalid_argument("sweep: sweep_lambdas must be non-empty");
    struct Cell {
        double lambda;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (double l : cfg.sweep_lambdas)
        for (std::uint64_t s : cfg.seeds) cells.push_back(Cell{l, s});
    std::vector<io::SweepRow> rows(cells.size());

    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), cells.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            rows[i] = run_sweep_cell(cfg, cells[i].lambda, cells[i].seed);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    const std::filesystem::path out_dir = cfg.out_dir;
    std::filesystem::create_directories(out_dir);
    io::atomic_write(out_dir / "sweep.csv", io::sweep_csv(rows));
    io::atomic_write(out_dir / "config.cfg", serialize_config(cfg));

    int failures = 0;
    for (const auto& r : rows)
        if (!r.ok) {
            ++failures;
            std::fprintf(stderr, "sweep cell (lambda=%g, seed=%llu) failed: %s\n", r.lambda,
                         static_cast<unsigned long long>(r.seed), r.error.c_str());
        }
    std::printf("sweep: %zu cells, %d failed\n", rows.size(), failures);
    return failures == 0 ? 0 : 1;
}

struct EvaluateOutput {
    training::EvalMetrics metrics;
    models::MlpSpec spec;
};

/// Recompute ensemble predictions and calibration for a stored posterior on
/// the config's test split. Uses the checkpoint's stored seed for the
/// evaluation noise stream, which reproduces the trainer's final log entry.
inline EvaluateOutput evaluate_checkpoint(const ExperimentConfig& cfg, const std::string& checkpoint_path) {
    cfg.validate();
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    BuiltData built = build_data(cfg);
    const models::MlpSpec spec = build_spec(cfg, built.train);
    if (!(spec == ckpt.spec))
        throw std::runtime_error("evaluate: checkpoint model spec does not match the configured model/data");
    const ad::Tensor probs = vi::ensemble_predict(ckpt.posterior, spec, built.test.inputs, cfg.train.ensemble_eval,
                                                  rng::derive_seed(ckpt.seed, {rng::kEval}));
    EvaluateOutput out;
    out.spec = spec;
    out.metrics = training::eval_probs(probs, built.test.labels, cfg.train.bin_count);
    return out;
}

inline int cmd_evaluate(const ExperimentConfig& cfg, const std::string& checkpoint_path) {
    EvaluateOutput out = evaluate_checkpoint(cfg, checkpoint_path);
    const std::filesystem::path out_dir = cfg.out_dir;
    std::filesystem::create_directories(out_dir);
    io::atomic_write(out_dir / "calibration_eval.csv",
                     io::calibration_summary_csv(out.metrics.report, out.metrics.accuracy));
    io::atomic_write(out_dir / "reliability_eval.csv", io::reliability_csv(out.metrics.report));
    std::printf("test accuracy = %.6f\n", out.metrics.accuracy);
    std::printf("test ECE = %.6f\n", out.metrics.ece);
    return 0;
}

}  // namespace calibra::cli
