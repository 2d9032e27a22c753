#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "calibra/autodiff.hpp"
#include "calibra/rng.hpp"
#include "calibra/tensor.hpp"

namespace calibra::models {

enum class Activation { kRelu, kTanh };

/// Multilayer perceptron with a softmax output: input_dim -> hidden_dims...
/// -> class_count logits.
struct MlpSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_dims;
    std::size_t class_count = 2;
    Activation activation = Activation::kRelu;

    void validate() const {
        if (input_dim == 0) throw std::invalid_argument("MlpSpec: input_dim must be positive");
        if (class_count < 2) throw std::invalid_argument("MlpSpec: class_count must be >= 2");
        for (std::size_t h : hidden_dims)
            if (h == 0) throw std::invalid_argument("MlpSpec: hidden dims must be positive");
    }

    std::size_t param_count() const {
        std::size_t n = 0, in = input_dim;
        for (std::size_t h : hidden_dims) {
            n += in * h + h;
            in = h;
        }
        return n + in * class_count + class_count;
    }

    bool operator==(const MlpSpec&) const = default;
};

struct LayerSlice {
    std::string name;
    std::size_t offset = 0;
    ad::Shape shape;
};

/// Flat view of all model parameters theta, with the structured layer
/// mapping used to slice it back into weight matrices and bias vectors.
struct ParamVector {
    std::vector<double> values;
    std::vector<LayerSlice> layout;

    std::size_t dim() const { return values.size(); }
};

inline std::vector<LayerSlice> layer_layout(const MlpSpec& spec) {
    spec.validate();
    std::vector<LayerSlice> layout;
    std::size_t offset = 0, in = spec.input_dim, layer = 0;
    auto push = [&](const std::string& name, ad::Shape shape) {
        const std::size_t n = ad::numel(shape);
        layout.push_back(LayerSlice{name, offset, std::move(shape)});
        offset += n;
    };
    std::vector<std::size_t> dims = spec.hidden_dims;
    dims.push_back(spec.class_count);
    for (std::size_t out : dims) {
        push("layer" + std::to_string(layer) + ".weight", ad::Shape{in, out});
        push("layer" + std::to_string(layer) + ".bias", ad::Shape{out});
        in = out;
        ++layer;
    }
    return layout;
}

/// Weights ~ N(0, 1/fan_in), biases zero. Deterministic in the seed.
inline ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
    ParamVector pv;
    pv.layout = layer_layout(spec);
    pv.values.assign(spec.param_count(), 0.0);
    auto stream = rng::derive(seed, {rng::kParamInit});
    for (const LayerSlice& s : pv.layout) {
        if (s.shape.size() != 2) continue;  // bias stays zero
        const double scale = 1.0 / std::sqrt(static_cast<double>(s.shape[0]));
        for (std::size_t i = 0; i < ad::numel(s.shape); ++i) pv.values[s.offset + i] = scale * stream.normal();
    }
    return pv;
}

inline void check_batch_dim(const MlpSpec& spec, const ad::Tensor& x) {
    if (x.rank() != 2 || x.shape()[1] != spec.input_dim)
        throw std::invalid_argument("mlp: input shape " + ad::shape_str(x.shape()) + " does not match input_dim " +
                                    std::to_string(spec.input_dim));
}

/// Forward pass to logits with theta given as a flat (graph) vector.
inline ad::Var mlp_logits(ad::Graph& g, const MlpSpec& spec, ad::Var theta, const ad::Tensor& x) {
    check_batch_dim(spec, x);
    if (theta.value().size() != spec.param_count())
        throw std::invalid_argument("mlp: theta has " + std::to_string(theta.value().size()) + " entries, spec needs " +
                                    std::to_string(spec.param_count()));
    const auto layout = layer_layout(spec);
    ad::Var h = g.input(x);
    for (std::size_t l = 0; l + 1 < layout.size(); l += 2) {
        ad::Var w = ad::slice(theta, layout[l].offset, layout[l].shape);
        ad::Var b = ad::slice(theta, layout[l + 1].offset, layout[l + 1].shape);
        h = ad::matmul(h, w) + b;
        const bool last = (l + 2 == layout.size());
        if (!last) h = spec.activation == Activation::kRelu ? ad::relu(h) : ad::tanh(h);
    }
    return h;
}

inline ad::Var predict_probs(ad::Graph& g, const MlpSpec& spec, ad::Var theta, const ad::Tensor& x) {
    return ad::softmax(mlp_logits(g, spec, theta, x));
}

/// Evaluation-only forward pass (builds a throwaway graph).
inline ad::Tensor predict_probs(const MlpSpec& spec, const ParamVector& theta, const ad::Tensor& x) {
    ad::Graph g;
    ad::Var t = g.input(ad::Tensor::vector(theta.values));
    return predict_probs(g, spec, t, x).value();
}

inline ad::Tensor onehot(const std::vector<int>& labels, std::size_t class_count) {
    ad::Tensor m = ad::Tensor::zeros(ad::Shape{labels.size(), class_count});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_count)
            throw std::invalid_argument("onehot: label " + std::to_string(labels[i]) + " out of range for " +
                                        std::to_string(class_count) + " classes");
        m.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
    }
    return m;
}

/// -sum_i log p(y_i | x_i, theta) over the batch. Log-probabilities go
/// through a stable log-softmax (row max subtracted), not log(softmax).
inline ad::Var cross_entropy(ad::Graph& g, const MlpSpec& spec, ad::Var theta, const ad::Tensor& x,
                             const std::vector<int>& labels) {
    if (labels.empty()) throw std::invalid_argument("cross_entropy: empty batch");
    if (labels.size() != x.shape()[0])
        throw std::invalid_argument("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                                    std::to_string(x.shape()[0]) + " rows");
    ad::Var lsm = ad::log_softmax(mlp_logits(g, spec, theta, x));
    ad::Var mask = g.input(onehot(labels, spec.class_count));
    return ad::neg(ad::sum(lsm * mask));
}

inline double cross_entropy(const MlpSpec& spec, const ParamVector& theta, const ad::Tensor& x,
                            const std::vector<int>& labels) {
    ad::Graph g;
    ad::Var t = g.input(ad::Tensor::vector(theta.values));
    return cross_entropy(g, spec, t, x, labels).value().scalar_value();
}

}  // namespace calibra::models
