#include <catch2/catch_amalgamated.hpp>

#include "calibra/variational.hpp"
#include "oracles.hpp"

using namespace calibra;
using ad::Shape;
using ad::Tensor;

TEST_CASE("collapsed posterior samples equal the mean", "[variational]") {
    vi::VariationalPosterior post;
    post.mu = {0.4, -1.2, 2.0};
    post.rho.assign(3, -20.0);
    auto stream = rng::derive(9, {rng::kTrainNoise});
    for (int i = 0; i < 50; ++i) {
        const auto s = vi::sample_theta(post, stream);
        for (std::size_t j = 0; j < 3; ++j) {
            REQUIRE(std::abs(s.epsilon[j]) <= 6.0);  // sanity on the normal draws
            CHECK_THAT(s.theta[j], Catch::Matchers::WithinAbs(post.mu[j], 1e-8));
        }
    }
}

TEST_CASE("zero epsilon reproduces the mean exactly", "[variational]") {
    vi::VariationalPosterior post;
    post.mu = {0.4, -1.2, 2.0};
    post.rho = {0.3, -0.5, 1.0};
    const auto theta = vi::theta_from(post, {0.0, 0.0, 0.0});
    CHECK(theta == post.mu);
}

TEST_CASE("empirical sample mean concentrates on mu", "[variational]") {
    vi::VariationalPosterior post;
    post.mu = {1.5, -0.7};
    post.rho = {std::log(0.5), std::log(2.0)};
    auto stream = rng::derive(33, {rng::kTrainNoise});
    const int n = 100000;
    std::vector<double> mean(2, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto s = vi::sample_theta(post, stream);
        mean[0] += s.theta[0];
        mean[1] += s.theta[1];
    }
    for (std::size_t j = 0; j < 2; ++j) {
        mean[j] /= n;
        const double band = 4.0 * std::exp(post.rho[j]) / std::sqrt(static_cast<double>(n));
        CHECK_THAT(mean[j], Catch::Matchers::WithinAbs(post.mu[j], band));
    }
}

TEST_CASE("KL is zero exactly at the prior", "[variational]") {
    vi::GaussianPrior prior{0.3, 0.7};
    vi::VariationalPosterior post;
    post.mu.assign(5, 0.3);
    post.rho.assign(5, std::log(0.7));
    CHECK_THAT(vi::kl_to_prior(post, prior), Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("KL of N(1,1) from N(0,1) is one half", "[variational]") {
    vi::GaussianPrior prior{0.0, 1.0};
    vi::VariationalPosterior post;
    post.mu = {1.0};
    post.rho = {0.0};
    CHECK_THAT(vi::kl_to_prior(post, prior), Catch::Matchers::WithinRel(0.5, 1e-12));
}

TEST_CASE("KL rejects a non-positive prior std", "[variational]") {
    vi::VariationalPosterior post;
    post.mu = {0.0};
    post.rho = {0.0};
    CHECK_THROWS_AS(vi::kl_to_prior(post, vi::GaussianPrior{0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(vi::kl_to_prior(post, vi::GaussianPrior{0.0, -1.0}), std::invalid_argument);
}

TEST_CASE("closed-form KL matches a Monte Carlo estimate", "[variational]") {
    // E_q[log q - log p] over 1e5 samples, within 3 standard errors
    auto master = rng::derive(501, {rng::kTrainNoise});
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t dim = 1 + master.below(4);
        vi::VariationalPosterior post;
        vi::GaussianPrior prior{master.normal() * 0.5, 0.3 + master.uniform()};
        for (std::size_t i = 0; i < dim; ++i) {
            post.mu.push_back(master.normal());
            post.rho.push_back(-1.0 + 2.0 * master.uniform());
        }
        const double closed = vi::kl_to_prior(post, prior);

        const int n = 100000;
        double sum = 0.0, sumsq = 0.0;
        auto stream = rng::derive(502, {rng::kTrainNoise, static_cast<std::uint64_t>(rep)});
        for (int s = 0; s < n; ++s) {
            double logq = 0.0, logp = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                const double sd = std::exp(post.rho[i]);
                const double theta = post.mu[i] + sd * stream.normal();
                const double zq = (theta - post.mu[i]) / sd;
                logq += -0.5 * zq * zq - std::log(sd);
                const double zp = (theta - prior.mean) / prior.std;
                logp += -0.5 * zp * zp - std::log(prior.std);
            }
            const double v = logq - logp;
            sum += v;
            sumsq += v * v;
        }
        const double mc = sum / n;
        const double se = std::sqrt(std::max(sumsq / n - mc * mc, 0.0) / n);
        INFO("rep " << rep << ": closed " << closed << " mc " << mc << " se " << se);
        CHECK(std::abs(closed - mc) <= 3.0 * se + 1e-9);
    }
}

TEST_CASE("KL is non-negative and its gradient matches finite differences", "[variational][fd]") {
    auto master = rng::derive(77, {rng::kTrainNoise});
    vi::GaussianPrior prior{0.1, 0.6};
    for (int rep = 0; rep < 25; ++rep) {
        const std::size_t dim = 3;
        std::vector<double> phi(2 * dim);
        for (auto& v : phi) v = master.normal() * 0.8;
        auto unpack = [&](const std::vector<double>& p) {
            vi::VariationalPosterior post;
            post.mu.assign(p.begin(), p.begin() + dim);
            post.rho.assign(p.begin() + dim, p.end());
            return post;
        };
        CHECK(vi::kl_to_prior(unpack(phi), prior) >= 0.0);

        auto value = [&](const std::vector<double>& p) { return vi::kl_to_prior(unpack(p), prior); };
        ad::Graph g;
        ad::Var mu = g.param(Tensor(Shape{dim}, std::vector<double>(phi.begin(), phi.begin() + dim)));
        ad::Var rho = g.param(Tensor(Shape{dim}, std::vector<double>(phi.begin() + dim, phi.end())));
        auto grads = g.backward(vi::kl_to_prior(g, mu, rho, prior));
        std::vector<double> analytic = grads.wrt(mu).data();
        const auto grho = grads.wrt(rho).data();
        analytic.insert(analytic.end(), grho.begin(), grho.end());
        const auto cmp = oracles::compare_grads(analytic, oracles::central_fd(value, phi));
        INFO("rep " << rep << " worst rel " << cmp.worst);
        REQUIRE(cmp.ok);
    }
    // KL stays positive near the prior point
    vi::VariationalPosterior atp;
    atp.mu.assign(3, prior.mean + 1e-3);
    atp.rho.assign(3, std::log(prior.std) - 1e-3);
    CHECK(vi::kl_to_prior(atp, prior) > 0.0);
}

TEST_CASE("graph and closed-form KL agree", "[variational]") {
    auto master = rng::derive(79, {rng::kTrainNoise});
    for (int rep = 0; rep < 10; ++rep) {
        vi::VariationalPosterior post;
        for (int i = 0; i < 4; ++i) {
            post.mu.push_back(master.normal());
            post.rho.push_back(master.normal() * 0.5);
        }
        vi::GaussianPrior prior{0.2, 0.9};
        ad::Graph g;
        ad::Var mu = g.input(Tensor::vector(post.mu));
        ad::Var rho = g.input(Tensor::vector(post.rho));
        CHECK_THAT(vi::kl_to_prior(g, mu, rho, prior).value().scalar_value(),
                   Catch::Matchers::WithinRel(vi::kl_to_prior(post, prior), 1e-12));
    }
}

TEST_CASE("near-deterministic ensemble equals the mean forward pass", "[variational]") {
    models::MlpSpec spec{2, {6}, 3};
    vi::VariationalPosterior post = vi::init_posterior(spec, 11, 0.01);
    post.rho.assign(post.rho.size(), -20.0);
    rng::Stream s(12);
    ad::Tensor x = Tensor::zeros(Shape{5, 2});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = s.normal();
    const ad::Tensor ens = vi::ensemble_predict(post, spec, x, 16, 900);
    models::ParamVector at_mu{post.mu, models::layer_layout(spec)};
    const ad::Tensor direct = models::predict_probs(spec, at_mu, x);
    for (std::size_t i = 0; i < ens.size(); ++i) CHECK_THAT(ens[i], Catch::Matchers::WithinAbs(direct[i], 1e-6));
}

TEST_CASE("single-sample ensemble equals one sampled forward pass", "[variational]") {
    models::MlpSpec spec{2, {4}, 2};
    vi::VariationalPosterior post = vi::init_posterior(spec, 21, 0.3);
    rng::Stream s(22);
    ad::Tensor x = Tensor::zeros(Shape{4, 2});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = s.normal();
    const ad::Tensor ens = vi::ensemble_predict(post, spec, x, 1, 901);
    auto member = rng::derive(901, {rng::kEnsemble, 0});
    models::ParamVector theta{vi::sample_theta(post, member).theta, models::layer_layout(spec)};
    const ad::Tensor direct = models::predict_probs(spec, theta, x);
    for (std::size_t i = 0; i < ens.size(); ++i) CHECK(ens[i] == direct[i]);
}

TEST_CASE("large ensembles concentrate independently of the seed", "[variational]") {
    models::MlpSpec spec{2, {4}, 2};
    vi::VariationalPosterior post = vi::init_posterior(spec, 31, 0.2);
    ad::Tensor x = Tensor::matrix(2, 2, {0.5, -0.3, -1.0, 0.8});
    const ad::Tensor a = vi::ensemble_predict(post, spec, x, 10000, 1000);
    const ad::Tensor b = vi::ensemble_predict(post, spec, x, 10000, 2000);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK_THAT(a[i], Catch::Matchers::WithinAbs(b[i], 0.01));
}

TEST_CASE("ensemble rows are probability vectors for every R", "[variational]") {
    models::MlpSpec spec{2, {5}, 3};
    vi::VariationalPosterior post = vi::init_posterior(spec, 41, 0.5);
    ad::Tensor x = Tensor::matrix(3, 2, {1.0, 0.0, -0.5, 2.0, 0.3, 0.3});
    for (int R : {1, 2, 7, 33}) {
        const ad::Tensor p = vi::ensemble_predict(post, spec, x, R, 77);
        for (std::size_t r = 0; r < 3; ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < 3; ++c) {
                CHECK(p.at(r, c) >= 0.0);
                sum += p.at(r, c);
            }
            CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-9));
        }
    }
    CHECK_THROWS_AS(vi::ensemble_predict(post, spec, x, 0, 77), std::invalid_argument);
}
