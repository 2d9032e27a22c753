#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace calibra::opt {

enum class Method { kSgd, kRmsprop, kAdam };

struct OptimizerConfig {
    Method method = Method::kRmsprop;
    double lr = 0.002;
    double rmsprop_decay = 0.9;
    double momentum = 0.0;      // rmsprop momentum
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        if (!(lr > 0.0)) throw std::invalid_argument("OptimizerConfig: lr must be positive");
    }

    bool operator==(const OptimizerConfig&) const = default;
};

/// First-order optimizer over one flat parameter vector. State (moment
/// buffers) is zero-initialized, so a zero gradient on the first step leaves
/// parameters untouched for every method.
class Optimizer {
public:
    Optimizer(const OptimizerConfig& cfg, std::size_t dim) : cfg_(cfg) {
        cfg_.validate();
        if (cfg_.method != Method::kSgd) {
            v_.assign(dim, 0.0);
            if (cfg_.method == Method::kAdam || cfg_.momentum != 0.0) m_.assign(dim, 0.0);
        }
        dim_ = dim;
    }

    void step(std::span<double> params, std::span<const double> grads) {
        if (params.size() != grads.size() || params.size() != dim_)
            throw std::invalid_argument("Optimizer: params length " + std::to_string(params.size()) +
                                        " vs grads length " + std::to_string(grads.size()) + " (state dim " +
                                        std::to_string(dim_) + ")");
        ++t_;
        switch (cfg_.method) {
            case Method::kSgd:
                for (std::size_t i = 0; i < dim_; ++i) params[i] -= cfg_.lr * grads[i];
                break;
            case Method::kRmsprop:
                for (std::size_t i = 0; i < dim_; ++i) {
                    v_[i] = cfg_.rmsprop_decay * v_[i] + (1.0 - cfg_.rmsprop_decay) * grads[i] * grads[i];
                    const double update = grads[i] / (std::sqrt(v_[i]) + cfg_.epsilon);
                    if (cfg_.momentum != 0.0) {
                        m_[i] = cfg_.momentum * m_[i] + update;
                        params[i] -= cfg_.lr * m_[i];
                    } else {
                        params[i] -= cfg_.lr * update;
                    }
                }
                break;
            case Method::kAdam: {
                const double bc1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
                const double bc2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
                for (std::size_t i = 0; i < dim_; ++i) {
                    m_[i] = cfg_.adam_beta1 * m_[i] + (1.0 - cfg_.adam_beta1) * grads[i];
                    v_[i] = cfg_.adam_beta2 * v_[i] + (1.0 - cfg_.adam_beta2) * grads[i] * grads[i];
                    params[i] -= cfg_.lr * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + cfg_.epsilon);
                }
                break;
            }
        }
    }

private:
    OptimizerConfig cfg_;
    std::size_t dim_ = 0;
    long t_ = 0;
    std::vector<double> m_, v_;
};

}  // namespace calibra::opt
