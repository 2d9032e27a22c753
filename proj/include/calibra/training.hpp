#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "calibra/autodiff.hpp"
#include "calibra/calibration.hpp"
#include "calibra/dataset.hpp"
#include "calibra/mlp.hpp"
#include "calibra/optim.hpp"
#include "calibra/rng.hpp"
#include "calibra/variational.hpp"

namespace calibra::training {

enum class Objective { kFnn, kCaFnn, kBnn, kCaBnn };

inline bool is_bayesian(Objective o) { return o == Objective::kBnn || o == Objective::kCaBnn; }
inline bool is_calibration_aware(Objective o) { return o == Objective::kCaFnn || o == Objective::kCaBnn; }

struct TrainConfig {
    Objective objective = Objective::kCaBnn;
    double lambda = 10.0;          // calibration weight (ignored for fnn/bnn)
    double beta = 0.1;             // free-energy weight
    int ensemble_train = 1;        // R, Monte Carlo samples per step
    int ensemble_eval = 32;        // R_eval, samples for test-time prediction
    opt::OptimizerConfig optimizer;
    std::size_t batch_size = 128;
    std::size_t epochs = 40;
    std::uint64_t seed = 1;
    cal::KernelSpec kernel;
    cal::TemperatureSpec temps;
    cal::AeceMode aece_mode = cal::AeceMode::kFullyDifferentiable;
    std::size_t bin_count = 15;
    vi::GaussianPrior prior;
    double posterior_init_std = 0.01;

    double effective_lambda() const { return is_calibration_aware(objective) ? lambda : 0.0; }

    bool operator==(const TrainConfig&) const = default;

    void validate() const {
        if (!(lambda >= 0.0)) throw std::invalid_argument("TrainConfig: lambda must be >= 0");
        if (!(beta >= 0.0)) throw std::invalid_argument("TrainConfig: beta must be >= 0");
        if (ensemble_train < 1) throw std::invalid_argument("TrainConfig: ensemble_train must be >= 1");
        if (ensemble_eval < 1) throw std::invalid_argument("TrainConfig: ensemble_eval must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
        if (bin_count < 1) throw std::invalid_argument("TrainConfig: bin_count must be >= 1");
        optimizer.validate();
        kernel.validate();
        temps.validate();
        prior.validate();
        if (!(posterior_init_std > 0.0)) throw std::invalid_argument("TrainConfig: posterior_init_std must be > 0");
    }
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;  // mean per-step objective as optimized
    double test_acc = 0.0;
    double test_ece = 0.0;
    double kl = 0.0;    // unweighted KL(q||p), 0 for frequentist objectives
    double aece = 0.0;  // unweighted AECE term, 0 when lambda is 0
    double seconds = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
};

struct PhiGrad {
    std::vector<double> mu;
    std::vector<double> rho;
};

// ---- objective builders ---------------------------------------------------

namespace detail {

struct ObjectiveParts {
    ad::Var total;
    double ce = 0.0;    // component forward values, for logging
    double aece = 0.0;
};

/// ce_scale * CE(theta | batch) + lambda * AECE(theta | batch). The trainer
/// passes ce_scale = n/|batch| so the stochastic objective is an unbiased
/// estimate of the full-data cross entropy; the AECE term is evaluated on
/// the mini-batch without rescaling.
inline ObjectiveParts frequentist_parts(ad::Graph& g, const models::MlpSpec& spec, ad::Var theta, const ad::Tensor& x,
                                        const std::vector<int>& y, const TrainConfig& cfg, double ce_scale) {
    ObjectiveParts parts;
    ad::Var ce = models::cross_entropy(g, spec, theta, x, y);
    parts.ce = ce.value().scalar_value();
    parts.total = ce_scale == 1.0 ? ce : ce * ce_scale;
    const double lambda = cfg.effective_lambda();
    if (lambda > 0.0) {
        ad::Var reg = cal::aece(g, spec, theta, x, y, cfg.kernel, cfg.temps, cfg.aece_mode);
        parts.aece = reg.value().scalar_value();
        parts.total = parts.total + reg * lambda;
    }
    return parts;
}

/// Monte Carlo part of the calibration-aware free energy with frozen draws:
/// (1/R) sum_r [ce_scale * CE(theta_r) + lambda * AECE(theta_r)], plus the
/// beta * |batch|/n * KL(q||p) term. theta_r = mu + exp(rho) o eps_r.
inline ObjectiveParts bayes_parts(ad::Graph& g, const models::MlpSpec& spec, ad::Var mu, ad::Var rho,
                                  const ad::Tensor& x, const std::vector<int>& y, std::size_t full_n,
                                  const TrainConfig& cfg, const std::vector<std::vector<double>>& eps,
                                  double ce_scale) {
    if (eps.empty()) throw std::invalid_argument("bayes objective: needs at least one epsilon draw");
    ObjectiveParts parts;
    ad::Var acc = g.constant(0.0);
    const double lambda = cfg.effective_lambda();
    for (const auto& eps_r : eps) {
        ad::Var theta_r = vi::reparam_theta(g, mu, rho, eps_r);
        ad::Var ce = models::cross_entropy(g, spec, theta_r, x, y);
        parts.ce += ce.value().scalar_value();
        ad::Var member = ce_scale == 1.0 ? ce : ce * ce_scale;
        if (lambda > 0.0) {
            ad::Var reg = cal::aece(g, spec, theta_r, x, y, cfg.kernel, cfg.temps, cfg.aece_mode);
            parts.aece += reg.value().scalar_value();
            member = member + reg * lambda;
        }
        acc = acc + member;
    }
    const double r = static_cast<double>(eps.size());
    parts.ce /= r;
    parts.aece /= r;
    parts.total = acc / r;
    if (cfg.beta > 0.0) {
        const double kl_weight = cfg.beta * static_cast<double>(y.size()) / static_cast<double>(full_n);
        parts.total = parts.total + vi::kl_to_prior(g, mu, rho, cfg.prior) * kl_weight;
    }
    return parts;
}

inline std::vector<std::vector<double>> noise_draws(const TrainConfig& cfg, std::size_t dim, std::uint64_t step) {
    std::vector<std::vector<double>> eps(static_cast<std::size_t>(cfg.ensemble_train));
    for (std::size_t r = 0; r < eps.size(); ++r)
        eps[r] = rng::derive(cfg.seed, {rng::kTrainNoise, step, r}).normals(dim);
    return eps;
}

}  // namespace detail

/// CE + lambda * AECE over the given batch (lambda = 0 recovers the plain
/// cross-entropy objective).
inline ad::Var frequentist_objective(ad::Graph& g, const models::MlpSpec& spec, ad::Var theta, const ad::Tensor& x,
                                     const std::vector<int>& y, const TrainConfig& cfg) {
    return detail::frequentist_parts(g, spec, theta, x, y, cfg, 1.0).total;
}

inline double frequentist_objective(const models::MlpSpec& spec, const models::ParamVector& theta, const ad::Tensor& x,
                                    const std::vector<int>& y, const TrainConfig& cfg) {
    ad::Graph g;
    ad::Var t = g.input(ad::Tensor::vector(theta.values));
    return frequentist_objective(g, spec, t, x, y, cfg).value().scalar_value();
}

/// Calibration-aware free-energy value with externally frozen noise draws.
inline double ca_bnn_objective(const vi::VariationalPosterior& post, const models::MlpSpec& spec, const ad::Tensor& x,
                               const std::vector<int>& y, std::size_t full_n, const TrainConfig& cfg,
                               const std::vector<std::vector<double>>& eps, double ce_scale = 1.0) {
    ad::Graph g;
    ad::Var mu = g.input(ad::Tensor::vector(post.mu));
    ad::Var rho = g.input(ad::Tensor::vector(post.rho));
    return detail::bayes_parts(g, spec, mu, rho, x, y, full_n, cfg, eps, ce_scale).total.value().scalar_value();
}

/// Gradient w.r.t. phi = (mu, rho) of the same objective, reparametrized.
inline PhiGrad ca_bnn_gradient(const vi::VariationalPosterior& post, const models::MlpSpec& spec, const ad::Tensor& x,
                               const std::vector<int>& y, std::size_t full_n, const TrainConfig& cfg,
                               const std::vector<std::vector<double>>& eps, double ce_scale = 1.0) {
    ad::Graph g;
    ad::Var mu = g.param(ad::Tensor::vector(post.mu));
    ad::Var rho = g.param(ad::Tensor::vector(post.rho));
    auto parts = detail::bayes_parts(g, spec, mu, rho, x, y, full_n, cfg, eps, ce_scale);
    auto grads = g.backward(parts.total);
    return PhiGrad{grads.wrt(mu).data(), grads.wrt(rho).data()};
}

/// One-step stochastic gradient of the calibration-aware free energy, with
/// the noise draws derived from (seed, step, r):
/// (1/R) sum_r (grad_phi theta_r) grad_theta [CE + lambda AECE](theta_r | batch)
///   + beta |batch|/n grad_phi KL(q || p).
inline PhiGrad ca_bnn_step_gradient(const vi::VariationalPosterior& post, const models::MlpSpec& spec,
                                    const ad::Tensor& x, const std::vector<int>& y, std::size_t full_n,
                                    const TrainConfig& cfg, std::uint64_t step) {
    return ca_bnn_gradient(post, spec, x, y, full_n, cfg, detail::noise_draws(cfg, post.dim(), step));
}

// ---- evaluation -----------------------------------------------------------

inline double accuracy(const ad::Tensor& probs, const std::vector<int>& labels) {
    const auto decisions = ad::argmax_rows(probs);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (decisions[i] == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

struct EvalMetrics {
    double accuracy = 0.0;
    double ece = 0.0;
    cal::CalibrationReport report;
};

inline EvalMetrics eval_probs(const ad::Tensor& probs, const std::vector<int>& labels, std::size_t bins) {
    EvalMetrics m;
    m.accuracy = accuracy(probs, labels);
    m.report = cal::compute_ece(cal::score_predictions(probs, labels), bins);
    m.ece = m.report.ece;
    return m;
}

// ---- training loop ----------------------------------------------------------

struct TrainResult {
    bool bayesian = false;
    models::ParamVector theta;           // frequentist state
    vi::VariationalPosterior posterior;  // bayesian state
    TrainLog log;
    EvalMetrics final_eval;
};

struct TrainHooks {
    // called after every optimizer step with the flat state: theta for
    // frequentist objectives, [mu | rho] for bayesian ones
    std::function<void(std::size_t step, const std::vector<double>& state)> on_step;
};

/// Test-set predictive distribution for the current state. Bayesian states
/// restart the evaluation noise stream every call (common random numbers),
/// so per-epoch ECE curves are comparable and checkpoint evaluation can
/// reproduce the final log entry exactly.
inline ad::Tensor predict_test(const models::MlpSpec& spec, const TrainResult& state, const ad::Tensor& x,
                               const TrainConfig& cfg) {
    if (state.bayesian)
        return vi::ensemble_predict(state.posterior, spec, x, cfg.ensemble_eval,
                                    rng::derive_seed(cfg.seed, {rng::kEval}));
    return models::predict_probs(spec, state.theta, x);
}

inline TrainResult train(const models::MlpSpec& spec, const data::Dataset& train_ds, const data::Dataset& test_ds,
                         const TrainConfig& cfg, const TrainHooks& hooks = {}) {
    cfg.validate();
    spec.validate();
    train_ds.validate();
    test_ds.validate();
    if (train_ds.dim() != spec.input_dim || train_ds.class_count != spec.class_count)
        throw std::invalid_argument("train: dataset shape does not match model spec");

    TrainResult state;
    state.bayesian = is_bayesian(cfg.objective);
    const std::size_t n = train_ds.n();
    std::size_t phi_dim = spec.param_count();
    if (state.bayesian) {
        state.posterior = vi::init_posterior(spec, cfg.seed, cfg.posterior_init_std);
        phi_dim *= 2;
    } else {
        state.theta = models::init_params(spec, cfg.seed);
    }
    opt::Optimizer optimizer(cfg.optimizer, phi_dim);

    std::vector<double> phi;  // flat optimizer view, [mu | rho] for bayesian
    if (state.bayesian) {
        phi = state.posterior.mu;
        phi.insert(phi.end(), state.posterior.rho.begin(), state.posterior.rho.end());
    }

    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        EpochRecord rec;
        rec.epoch = epoch;
        std::size_t steps_in_epoch = 0;

        const auto order = data::batches(n, cfg.batch_size, rng::derive_seed(cfg.seed, {rng::kShuffle, epoch}));
        for (const auto& idx : order) {
            const data::Dataset batch = data::take_rows(train_ds, idx, "batch");
            const double ce_scale = static_cast<double>(n) / static_cast<double>(batch.n());
            double loss = 0.0;
            if (state.bayesian) {
                ad::Graph g;
                ad::Var mu = g.param(ad::Tensor::vector(state.posterior.mu));
                ad::Var rho = g.param(ad::Tensor::vector(state.posterior.rho));
                const auto eps = detail::noise_draws(cfg, state.posterior.dim(), step);
                auto parts = detail::bayes_parts(g, spec, mu, rho, batch.inputs, batch.labels, n, cfg, eps, ce_scale);
                loss = parts.total.value().scalar_value();
                if (!std::isfinite(loss))
                    throw std::runtime_error("train: non-finite loss at step " + std::to_string(step));
                rec.kl += vi::kl_to_prior(state.posterior, cfg.prior);
                auto grads = g.backward(parts.total);
                const ad::Tensor gmu = grads.wrt(mu), grho = grads.wrt(rho);
                std::vector<double> gphi = gmu.data();
                gphi.insert(gphi.end(), grho.data().begin(), grho.data().end());
                optimizer.step(phi, gphi);
                const std::size_t N = state.posterior.dim();
                std::copy(phi.begin(), phi.begin() + static_cast<std::ptrdiff_t>(N), state.posterior.mu.begin());
                std::copy(phi.begin() + static_cast<std::ptrdiff_t>(N), phi.end(), state.posterior.rho.begin());
                rec.aece += parts.aece;
            } else {
                ad::Graph g;
                ad::Var theta = g.param(ad::Tensor::vector(state.theta.values));
                auto parts = detail::frequentist_parts(g, spec, theta, batch.inputs, batch.labels, cfg, ce_scale);
                loss = parts.total.value().scalar_value();
                if (!std::isfinite(loss))
                    throw std::runtime_error("train: non-finite loss at step " + std::to_string(step));
                auto grads = g.backward(parts.total);
                optimizer.step(state.theta.values, grads.wrt(theta).data());
                rec.aece += parts.aece;
            }
            rec.train_loss += loss;
            ++steps_in_epoch;
            ++step;
            if (hooks.on_step) hooks.on_step(step, state.bayesian ? phi : state.theta.values);
        }

        rec.train_loss /= static_cast<double>(steps_in_epoch);
        rec.kl /= static_cast<double>(steps_in_epoch);
        rec.aece /= static_cast<double>(steps_in_epoch);
        const EvalMetrics m = eval_probs(predict_test(spec, state, test_ds.inputs, cfg), test_ds.labels, cfg.bin_count);
        rec.test_acc = m.accuracy;
        rec.test_ece = m.ece;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        state.log.epochs.push_back(rec);
        state.final_eval = m;
    }
    if (cfg.epochs > 0) return state;
    state.final_eval = eval_probs(predict_test(spec, state, test_ds.inputs, cfg), test_ds.labels, cfg.bin_count);
    return state;
}

}  // namespace calibra::training
