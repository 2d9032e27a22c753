#include <catch2/catch_amalgamated.hpp>

#include "calibra/mlp.hpp"
#include "calibra/rng.hpp"
#include "oracles.hpp"

using namespace calibra;
using ad::Shape;
using ad::Tensor;

namespace {

Tensor random_inputs(std::size_t rows, std::size_t cols, rng::Stream& s) {
    Tensor t = Tensor::zeros(Shape{rows, cols});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = s.normal();
    return t;
}

std::vector<int> random_labels(std::size_t n, std::size_t k, rng::Stream& s) {
    std::vector<int> y(n);
    for (auto& v : y) v = static_cast<int>(s.below(k));
    return y;
}

}  // namespace

TEST_CASE("parameter counting for 2 -> [4] -> 2", "[models]") {
    models::MlpSpec spec{2, {4}, 2};
    CHECK(spec.param_count() == 22);
    const auto layout = models::layer_layout(spec);
    REQUIRE(layout.size() == 4);
    CHECK(layout[0].name == "layer0.weight");
    CHECK(layout[0].shape == Shape{2, 4});
    CHECK(layout[3].offset + ad::numel(layout[3].shape) == 22);
    // offsets contiguous and non-overlapping
    std::size_t expect = 0;
    for (const auto& s : layout) {
        CHECK(s.offset == expect);
        expect += ad::numel(s.shape);
    }
}

TEST_CASE("init_params is deterministic in the seed", "[models]") {
    models::MlpSpec spec{3, {5, 4}, 3};
    const auto a = models::init_params(spec, 42);
    const auto b = models::init_params(spec, 42);
    REQUIRE(a.values == b.values);
    const auto c = models::init_params(spec, 43);
    CHECK(a.values != c.values);
    // biases zero
    for (const auto& s : a.layout)
        if (s.shape.size() == 1)
            for (std::size_t i = 0; i < ad::numel(s.shape); ++i) CHECK(a.values[s.offset + i] == 0.0);
}

TEST_CASE("all-zero weights give uniform class probabilities", "[models]") {
    models::MlpSpec spec{2, {4}, 5};
    models::ParamVector theta;
    theta.layout = models::layer_layout(spec);
    theta.values.assign(spec.param_count(), 0.0);
    rng::Stream s(3);
    const Tensor probs = models::predict_probs(spec, theta, random_inputs(6, 2, s));
    for (std::size_t i = 0; i < probs.size(); ++i) CHECK_THAT(probs[i], Catch::Matchers::WithinAbs(0.2, 1e-12));
}

TEST_CASE("probability rows sum to one", "[models]") {
    models::MlpSpec spec{3, {8, 6}, 4, models::Activation::kTanh};
    const auto theta = models::init_params(spec, 5);
    rng::Stream s(6);
    const Tensor probs = models::predict_probs(spec, theta, random_inputs(32, 3, s));
    for (std::size_t r = 0; r < 32; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < 4; ++c) sum += probs.at(r, c);
        CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-9));
        for (std::size_t c = 0; c < 4; ++c) CHECK(probs.at(r, c) >= 0.0);
    }
}

TEST_CASE("hand-built single-layer net matches a hand-evaluated softmax", "[models]") {
    // logits = x W + b with x = (1, 2), W = [[0.5, -1, 0], [0.25, 0.5, -0.5]], b = (0.1, 0, -0.1)
    models::MlpSpec spec{2, {}, 3};
    models::ParamVector theta;
    theta.layout = models::layer_layout(spec);
    theta.values = {0.5, -1.0, 0.0, 0.25, 0.5, -0.5, 0.1, 0.0, -0.1};
    const Tensor probs = models::predict_probs(spec, theta, Tensor::matrix(1, 2, {1.0, 2.0}));
    const double z0 = 1.0 * 0.5 + 2.0 * 0.25 + 0.1;   // 1.1
    const double z1 = 1.0 * -1.0 + 2.0 * 0.5 + 0.0;   // 0.0
    const double z2 = 1.0 * 0.0 + 2.0 * -0.5 - 0.1;   // -1.1
    const double denom = std::exp(z0) + std::exp(z1) + std::exp(z2);
    CHECK_THAT(probs[0], Catch::Matchers::WithinAbs(std::exp(z0) / denom, 1e-12));
    CHECK_THAT(probs[1], Catch::Matchers::WithinAbs(std::exp(z1) / denom, 1e-12));
    CHECK_THAT(probs[2], Catch::Matchers::WithinAbs(std::exp(z2) / denom, 1e-12));
}

TEST_CASE("input dimension mismatch is an error", "[models]") {
    models::MlpSpec spec{3, {4}, 2};
    const auto theta = models::init_params(spec, 1);
    CHECK_THROWS_AS(models::predict_probs(spec, theta, Tensor::matrix(2, 2, {1, 2, 3, 4})), std::invalid_argument);
}

TEST_CASE("cross entropy of the uniform predictor is n log K", "[models]") {
    models::MlpSpec spec{2, {4}, 5};
    models::ParamVector theta;
    theta.layout = models::layer_layout(spec);
    theta.values.assign(spec.param_count(), 0.0);
    rng::Stream s(8);
    const std::size_t n = 7;
    const double ce = models::cross_entropy(spec, theta, random_inputs(n, 2, s), random_labels(n, 5, s));
    CHECK_THAT(ce, Catch::Matchers::WithinRel(static_cast<double>(n) * std::log(5.0), 1e-12));
}

TEST_CASE("cross entropy is zero for a perfect predictor and positive otherwise", "[models]") {
    // a one-layer net with huge weights on a one-hot feature acts as a
    // probability-1 predictor for the matching label
    models::MlpSpec spec{3, {}, 3};
    models::ParamVector theta;
    theta.layout = models::layer_layout(spec);
    theta.values.assign(spec.param_count(), 0.0);
    for (std::size_t i = 0; i < 3; ++i) theta.values[i * 3 + i] = 200.0;  // W = 200 I
    const Tensor x = Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    const std::vector<int> y{0, 1, 2};
    CHECK_THAT(models::cross_entropy(spec, theta, x, y), Catch::Matchers::WithinAbs(0.0, 1e-12));
    const std::vector<int> wrong{1, 2, 0};
    CHECK(models::cross_entropy(spec, theta, x, wrong) > 0.0);
}

TEST_CASE("cross entropy matches a 3-example hand evaluation", "[models]") {
    models::MlpSpec spec{2, {}, 2};
    models::ParamVector theta;
    theta.layout = models::layer_layout(spec);
    theta.values = {1.0, -0.5, 0.0, 0.75, 0.2, -0.2};  // W, b
    const Tensor x = Tensor::matrix(3, 2, {0.5, 1.0, -1.0, 0.0, 2.0, -1.5});
    const std::vector<int> y{0, 1, 0};
    double expected = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double z0 = x.at(i, 0) * 1.0 + x.at(i, 1) * 0.0 + 0.2;
        const double z1 = x.at(i, 0) * -0.5 + x.at(i, 1) * 0.75 - 0.2;
        const double zy = y[i] == 0 ? z0 : z1;
        expected += -(zy - std::log(std::exp(z0) + std::exp(z1)));
    }
    CHECK_THAT(models::cross_entropy(spec, theta, x, y), Catch::Matchers::WithinRel(expected, 1e-12));
}

TEST_CASE("cross entropy rejects an empty batch", "[models]") {
    models::MlpSpec spec{2, {4}, 2};
    const auto theta = models::init_params(spec, 1);
    CHECK_THROWS_AS(models::cross_entropy(spec, theta, Tensor::zeros(Shape{0, 2}), {}), std::invalid_argument);
}

TEST_CASE("cross entropy gradient matches finite differences", "[models][fd]") {
    rng::Stream s(77);
    for (int trial = 0; trial < 10; ++trial) {
        models::MlpSpec spec{2, {5}, 3, trial % 2 ? models::Activation::kTanh : models::Activation::kRelu};
        auto theta = models::init_params(spec, 100 + static_cast<std::uint64_t>(trial));
        // randomize biases too, keeping relu pre-activations off their kinks
        for (auto& v : theta.values) v += 0.1 * s.normal();
        const Tensor x = random_inputs(6, 2, s);
        const auto y = random_labels(6, 3, s);
        auto value = [&](const std::vector<double>& v) {
            models::ParamVector t{v, theta.layout};
            return models::cross_entropy(spec, t, x, y);
        };
        ad::Graph g;
        ad::Var tv = g.param(Tensor::vector(theta.values));
        auto grads = g.backward(models::cross_entropy(g, spec, tv, x, y));
        const auto cmp = oracles::compare_grads(grads.wrt(tv).data(), oracles::central_fd(value, theta.values));
        INFO("trial " << trial << ": worst rel " << cmp.worst);
        REQUIRE(cmp.ok);
    }
}

TEST_CASE("predict_probs is permutation-consistent", "[models]") {
    models::MlpSpec spec{3, {6}, 4};
    const auto theta = models::init_params(spec, 21);
    rng::Stream s(22);
    const Tensor x = random_inputs(8, 3, s);
    const Tensor probs = models::predict_probs(spec, theta, x);
    // reverse the batch rows
    Tensor xr = Tensor::zeros(Shape{8, 3});
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t c = 0; c < 3; ++c) xr.at(i, c) = x.at(7 - i, c);
    const Tensor probs_r = models::predict_probs(spec, theta, xr);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t c = 0; c < 4; ++c) CHECK(probs_r.at(i, c) == probs.at(7 - i, c));
}
