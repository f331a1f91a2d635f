#include <doctest.h>

#include <cmath>
#include <map>

#include "aboots/autodiff/ops.hpp"
#include "aboots/errors.hpp"
#include "aboots/policy/policy.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace aboots;
using namespace aboots::policy;

namespace {

// |observed - expected| within three binomial standard errors.
bool within_3_sigma(std::size_t count, std::size_t n, double p) {
  const double nn = static_cast<double>(n);
  return std::abs(static_cast<double>(count) - nn * p) <= 3.0 * std::sqrt(nn * p * (1.0 - p));
}

}  // namespace

TEST_SUITE("policy") {
  TEST_CASE("top-k indices") {
    const ad::Tensor p = ad::Tensor::vector({0.1, 0.4, 0.1, 0.3, 0.1});
    CHECK(top_k_indices(p, 2) == std::vector<corpus::TokenId>{1, 3});
    CHECK(top_k_indices(p, 4) == std::vector<corpus::TokenId>{1, 3, 0, 2});
    CHECK(top_k_indices(p, 1) == std::vector<corpus::TokenId>{1});
    CHECK_THROWS_AS(top_k_indices(p, 0), ConfigError);
    CHECK_THROWS_AS(top_k_indices(p, 6), ConfigError);
  }

  TEST_CASE("k = 1 always returns the argmax") {
    ad::Rng rng(1);
    const ad::Tensor p = ad::Tensor::vector({0.2, 0.1, 0.5, 0.2});
    for (int i = 0; i < 200; ++i) {
      CHECK(sample_top_k_categorical(p, 1, rng) == 2);
      CHECK(sample_top_k_uniform(p, 1, rng) == 2);
    }
  }

  TEST_CASE("top-k categorical frequencies") {
    ad::Rng rng(2);
    const ad::Tensor p = ad::Tensor::vector({0.5, 0.3, 0.2});
    const std::size_t n = 100000;
    std::map<corpus::TokenId, std::size_t> counts;
    for (std::size_t i = 0; i < n; ++i) ++counts[sample_top_k_categorical(p, 2, rng)];
    CHECK(counts[2] == 0);
    CHECK(within_3_sigma(counts[0], n, 0.625));
    CHECK(within_3_sigma(counts[1], n, 0.375));
  }

  TEST_CASE("top-k uniform frequencies") {
    ad::Rng rng(3);
    const ad::Tensor p = ad::Tensor::vector({0.5, 0.3, 0.2});
    const std::size_t n = 100000;
    std::map<corpus::TokenId, std::size_t> counts;
    for (std::size_t i = 0; i < n; ++i) ++counts[sample_top_k_uniform(p, 2, rng)];
    CHECK(counts[2] == 0);
    CHECK(within_3_sigma(counts[0], n, 0.5));
  }

  TEST_CASE("samples stay within the top-k set") {
    ad::Rng rng(4);
    std::mt19937_64 gen(4);
    for (int trial = 0; trial < 50; ++trial) {
      ad::Tensor logits = testing::random_tensor({9}, gen, -2.0, 2.0);
      const ad::Tensor p = ad::softmax_with_temperature(logits, 1.0);
      const std::size_t k = 1 + static_cast<std::size_t>(trial % 9);
      const auto ids = top_k_indices(p, k);
      for (int i = 0; i < 50; ++i) {
        const auto c = sample_top_k_categorical(p, k, rng);
        const auto u = sample_top_k_uniform(p, k, rng);
        CHECK(std::find(ids.begin(), ids.end(), c) != ids.end());
        CHECK(std::find(ids.begin(), ids.end(), u) != ids.end());
      }
    }
  }

  TEST_CASE("gaussian strategy has no token sampler") {
    CHECK_THROWS_AS(make_sampler(PolicyConfig{Strategy::gaussian, 5}), ContractError);
    CHECK_NOTHROW(make_sampler(PolicyConfig{Strategy::uniform, 5}));
  }

  TEST_CASE("reinforce surrogate") {
    ad::Graph g;
    const ad::Var logits = g.input(ad::Tensor::vector({0.3, -0.2, 0.5}));
    const ad::Var lp = ad::log_softmax(logits, 1.0);
    const std::vector<ad::Var> lps{ad::pick(lp, 0), ad::pick(lp, 2)};

    const std::vector<double> zero{0.0};
    const ad::Var l0 = reinforce_loss(g, lps, zero, 1.0);
    CHECK(l0.item() == 0.0);
    g.backward(l0);
    const ad::Tensor gl = g.grad(logits);
    for (double v : gl.values()) CHECK(v == 0.0);

    const std::vector<double> q{0.4};
    const double expected = -0.8 * 0.4 * (lps[0].item() + lps[1].item());
    CHECK(reinforce_loss(g, lps, q, 0.8).item() == doctest::Approx(expected).epsilon(1e-14));
    const std::vector<double> per_token{0.1, 0.7};
    CHECK(reinforce_loss(g, lps, per_token, 1.0).item() ==
          doctest::Approx(-(0.1 * lps[0].item() + 0.7 * lps[1].item())).epsilon(1e-14));
    const std::vector<double> wrong{0.1, 0.2, 0.3};
    CHECK_THROWS_AS(reinforce_loss(g, lps, wrong, 1.0), ShapeError);
  }

  TEST_CASE("one-step enumeration of the score-function estimator is exact") {
    // E_y[Q(y) grad log p(y)] summed over all outcomes equals grad E[Q].
    const std::vector<double> logits{0.2, -0.4, 0.9}, q{0.3, 0.8, 0.1};
    std::vector<double> expectation(3, 0.0);
    const ad::Tensor p = ad::softmax_with_temperature(ad::Tensor::vector(logits), 1.0);
    for (std::size_t y = 0; y < 3; ++y) {
      ad::Graph g;
      const ad::Var a = g.input(ad::Tensor::vector(logits));
      const std::vector<ad::Var> lps{ad::pick(ad::log_softmax(a, 1.0), y)};
      const std::vector<double> w{q[y]};
      g.backward(reinforce_loss(g, lps, w, 1.0));
      for (std::size_t i = 0; i < 3; ++i) expectation[i] -= p[y] * g.grad(a)[i];
    }
    double mean_q = 0.0;
    for (std::size_t y = 0; y < 3; ++y) mean_q += p[y] * q[y];
    for (std::size_t i = 0; i < 3; ++i) CHECK(expectation[i] == doctest::Approx(p[i] * (q[i] - mean_q)).epsilon(1e-12));
  }

  TEST_CASE("score-function estimate is unbiased on an enumerable policy") {
    const testing::PolicyToy toy(17);
    const auto exact = toy.exact_gradient();
    const auto stats = testing::run_estimator(toy, 100000, 99);
    for (std::size_t k = 0; k < exact.size(); ++k) {
      INFO("component ", k, " exact ", exact[k], " mean ", stats.mean[k], " se ", stats.standard_error[k]);
      CHECK(std::abs(stats.mean[k] - exact[k]) <= 3.0 * stats.standard_error[k] + 1e-9);
    }
  }

  TEST_CASE("constant Q gives a zero-mean estimate") {
    const testing::PolicyToy toy(18);
    const auto stats = testing::run_estimator(toy, 100000, 100, 0.7);
    for (std::size_t k = 0; k < stats.mean.size(); ++k) {
      INFO("component ", k);
      CHECK(std::abs(stats.mean[k]) <= 3.0 * stats.standard_error[k] + 1e-9);
    }
  }

  TEST_CASE("relaxed inputs of one-hot distributions are embedding rows") {
    model::ModelConfig mc;
    mc.vocab_size = 6;
    mc.h_dim = 3;
    mc.layers = 1;
    ad::Rng rng(5);
    const ad::ParameterSet params = model::make_parameters(mc, rng);
    ad::Graph g(params);
    std::vector<ad::Var> dists;
    for (std::size_t v : {0u, 4u}) {
      ad::Tensor onehot = ad::Tensor::zeros({6});
      onehot[v] = 1.0;
      dists.push_back(g.input(onehot));
    }
    const auto relaxed = relaxed_inputs(g, dists);
    const ad::Tensor& E = params.value(model::kEmbedding);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(relaxed[0].value()[i] == E[0 * 3 + i]);
      CHECK(relaxed[1].value()[i] == E[4 * 3 + i]);
    }
  }

  TEST_CASE("deterministic policy is deterministic for fixed noise") {
    model::ModelConfig mc;
    mc.vocab_size = 8;
    mc.h_dim = 4;
    mc.layers = 2;
    mc.level = model::DiscriminationLevel::utterance;
    mc.max_decode_len = 5;
    ad::Rng rng(6);
    const ad::ParameterSet params = model::make_parameters(mc, rng);
    const model::HredModel m(mc);
    const std::vector<corpus::Sequence> ctx{{4, 5, corpus::kEos}};
    auto run = [&](const ad::Tensor& z) {
      ad::Graph g(params);
      const auto enc = m.encode(g, ctx);
      const auto r = deterministic_policy_loss(g, m, enc, z, 1.0, 1.0);
      return std::make_pair(r.decoding.tokens, r.surrogate.item());
    };
    const ad::Tensor zero = ad::Tensor::zeros({4});
    const auto a = run(zero), b = run(zero);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
    CHECK(a.second <= 0.0);
    CHECK(a.second >= -1.0);

    ad::Rng nrng(7);
    const ad::Tensor z = sample_noise(4, nrng);
    CHECK(z.size() == 4);
  }
}
