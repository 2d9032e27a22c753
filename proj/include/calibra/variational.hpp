#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "calibra/autodiff.hpp"
#include "calibra/mlp.hpp"
#include "calibra/rng.hpp"
#include "calibra/tensor.hpp"

namespace calibra::vi {

/// Mean-field Gaussian posterior q(theta | phi) = N(mu, Diag(exp(2 rho))),
/// phi = [mu, rho]. rho holds log standard deviations, so the stds are
/// positive by construction.
struct VariationalPosterior {
    std::vector<double> mu;
    std::vector<double> rho;

    std::size_t dim() const { return mu.size(); }

    void validate() const {
        if (mu.size() != rho.size()) throw std::invalid_argument("VariationalPosterior: mu/rho length mismatch");
    }
};

/// Isotropic Gaussian prior with a shared scalar mean and std.
struct GaussianPrior {
    double mean = 0.0;
    double std = 0.05;

    void validate() const {
        if (!(std > 0.0)) throw std::invalid_argument("GaussianPrior: std must be positive");
    }

    bool operator==(const GaussianPrior&) const = default;
};

/// mu from the frequentist initializer, rho = log(init_std) everywhere.
inline VariationalPosterior init_posterior(const models::MlpSpec& spec, std::uint64_t seed, double init_std = 0.01) {
    VariationalPosterior post;
    post.mu = models::init_params(spec, seed).values;
    post.rho.assign(post.mu.size(), std::log(init_std));
    return post;
}

struct ThetaSample {
    std::vector<double> theta;
    std::vector<double> epsilon;
};

inline std::vector<double> theta_from(const VariationalPosterior& post, const std::vector<double>& eps) {
    post.validate();
    if (eps.size() != post.dim()) throw std::invalid_argument("theta_from: epsilon length mismatch");
    std::vector<double> theta(post.dim());
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = post.mu[i] + std::exp(post.rho[i]) * eps[i];
    return theta;
}

/// Reparametrized draw theta = mu + exp(rho) o eps, eps ~ N(0, I). The draw
/// is returned so theta stays a differentiable function of phi in a graph.
inline ThetaSample sample_theta(const VariationalPosterior& post, rng::Stream& stream) {
    ThetaSample s;
    s.epsilon = stream.normals(post.dim());
    s.theta = theta_from(post, s.epsilon);
    return s;
}

/// Graph form of the reparametrization, for gradients w.r.t. (mu, rho).
inline ad::Var reparam_theta(ad::Graph& g, ad::Var mu, ad::Var rho, const std::vector<double>& eps) {
    ad::Var e = g.input(ad::Tensor::vector(eps));
    return mu + ad::exp(rho) * e;
}

/// Closed-form KL(q || p) for diagonal Gaussian q and isotropic Gaussian p:
/// sum_i [ log s - rho_i + (exp(2 rho_i) + (mu_i - m)^2) / (2 s^2) - 1/2 ].
inline double kl_to_prior(const VariationalPosterior& post, const GaussianPrior& prior) {
    post.validate();
    prior.validate();
    const double log_s = std::log(prior.std), inv_2s2 = 0.5 / (prior.std * prior.std);
    double kl = 0.0;
    for (std::size_t i = 0; i < post.dim(); ++i) {
        const double d = post.mu[i] - prior.mean;
        kl += log_s - post.rho[i] + (std::exp(2.0 * post.rho[i]) + d * d) * inv_2s2 - 0.5;
    }
    return kl;
}

inline ad::Var kl_to_prior(ad::Graph& g, ad::Var mu, ad::Var rho, const GaussianPrior& prior) {
    prior.validate();
    const double n = static_cast<double>(mu.value().size());
    ad::Var d = mu - prior.mean;
    ad::Var var_term = ad::exp(rho * 2.0) + d * d;
    return ad::sum(var_term) * (0.5 / (prior.std * prior.std)) - ad::sum(rho) +
           g.constant(n * (std::log(prior.std) - 0.5));
}

/// Bayesian predictive: (1/R) sum_r p(y | x, theta_r), theta_r ~ q. Each
/// ensemble index r draws from a sub-stream of `seed`, so changing R leaves
/// earlier members' draws untouched.
inline ad::Tensor ensemble_predict(const VariationalPosterior& post, const models::MlpSpec& spec, const ad::Tensor& x,
                                   int R, std::uint64_t seed) {
    if (R < 1) throw std::invalid_argument("ensemble_predict: R must be >= 1");
    post.validate();
    if (post.dim() != spec.param_count()) throw std::invalid_argument("ensemble_predict: posterior/spec size mismatch");
    ad::Tensor acc = ad::Tensor::zeros(ad::Shape{x.shape()[0], spec.class_count});
    models::ParamVector theta;
    theta.layout = models::layer_layout(spec);
    for (int r = 0; r < R; ++r) {
        auto stream = rng::derive(seed, {rng::kEnsemble, static_cast<std::uint64_t>(r)});
        theta.values = sample_theta(post, stream).theta;
        acc.add_in_place(models::predict_probs(spec, theta, x));
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] /= static_cast<double>(R);
    return acc;
}

}  // namespace calibra::vi
