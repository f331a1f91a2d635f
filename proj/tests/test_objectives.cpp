#include <doctest.h>

#include <cmath>
#include <random>

#include "aboots/autodiff/ops.hpp"
#include "aboots/errors.hpp"
#include "aboots/objectives/objectives.hpp"
#include "aboots/train/trainer.hpp"
#include "fixtures.hpp"
#include "gradient_suite.hpp"

using namespace aboots;
using namespace aboots::objectives;

namespace {

double max_abs_diff(const ad::Gradients& a, const ad::Gradients& b) {
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (const auto& [name, t] : a) {
    const ad::Tensor& u = b.at(name);
    REQUIRE(u.size() == t.size());
    for (std::size_t i = 0; i < t.size(); ++i) worst = std::max(worst, std::abs(t[i] - u[i]));
  }
  return worst;
}

// Batch mean of the summed teacher-forced NLL, computed outside the trainer.
double batch_nll(const model::HredModel& m, const ad::ParameterSet& params,
                 std::span<const corpus::DialogueExample> batch, double tau) {
  double total = 0.0;
  for (const auto& ex : batch) {
    ad::Graph g(params);
    const auto enc = m.encode(g, ex.context);
    model::DecodeOptions opt;
    opt.mode = model::DecodeMode::teacher_forcing;
    opt.ground_truth = ex.target;
    opt.tau = tau;
    total -= m.generate(g, enc, opt).sequence_log_prob.item();
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace

TEST_SUITE("objectives") {
  TEST_CASE("generator targets") {
    const Hyperparams hp{0.7, 0.9, 1.0};
    CHECK(generator_target(SampleKind::ground_truth, 0.0, hp) == 0.9);
    CHECK(generator_target(SampleKind::tf_argmax, 0.8, hp) == 0.0);
    CHECK(generator_target(SampleKind::policy_sample, 1.0, hp) == doctest::Approx(0.7));
    CHECK(generator_target(SampleKind::policy_sample, 0.5, hp) == doctest::Approx(0.35));
    CHECK_THROWS_AS(generator_target(SampleKind::policy_sample, 1.5, hp), ContractError);
    CHECK_THROWS_AS(generator_target(SampleKind::policy_sample, -0.1, hp), ContractError);

    const Hyperparams one{1.0, 1.0, 1.0};
    CHECK(generator_target_word(SampleKind::policy_sample, 0.6, one, WordCoefficient::one_minus_beta) == 0.0);
    CHECK(generator_target_word(SampleKind::policy_sample, 0.6, one, WordCoefficient::alpha) == doctest::Approx(0.6));
    CHECK(generator_target_word(SampleKind::ground_truth, 0.6, one) == 1.0);
    CHECK(generator_target_word(SampleKind::tf_argmax, 0.6, one) == 0.0);
  }

  TEST_CASE("discriminator targets") {
    const Hyperparams hp{1.0, 0.8, 1.0};
    CHECK(discriminator_target(SampleKind::ground_truth, hp) == 0.8);
    CHECK(discriminator_target(SampleKind::tf_argmax, hp) == 0.0);
    CHECK(discriminator_target(SampleKind::distractor, hp) == 0.0);
    CHECK_THROWS_AS(discriminator_target(SampleKind::policy_sample, hp), ContractError);
  }

  TEST_CASE("hyperparameter validation") {
    CHECK_NOTHROW(Hyperparams{}.validate());
    CHECK_THROWS_AS((Hyperparams{1.0, 1.5, 1.0}.validate()), InvalidHyperparameterError);
    CHECK_THROWS_AS((Hyperparams{-1.0, 0.5, 1.0}.validate()), InvalidHyperparameterError);
    CHECK_THROWS_AS((Hyperparams{1.0, 0.5, 0.0}.validate()), InvalidHyperparameterError);
  }

  TEST_CASE("generator loss examples") {
    const std::vector<double> t{1.0, 0.5}, lp{-1.0, -2.0};
    CHECK(generator_loss(t, lp) == doctest::Approx(2.0));
    const std::vector<double> zeros{0.0, 0.0};
    CHECK(generator_loss(zeros, lp) == 0.0);

    ad::Graph g;
    const std::vector<GeneratorTerm> terms{{{g.input(ad::Tensor::scalar(-1.0))}, {1.0}},
                                           {{g.input(ad::Tensor::scalar(-2.0))}, {0.5}}};
    CHECK(generator_loss(g, terms).item() == doctest::Approx(2.0));
    const std::vector<GeneratorTerm> none{{{g.input(ad::Tensor::scalar(-1.0))}, {0.0}}};
    CHECK(generator_loss(g, none).item() == 0.0);
    const std::vector<GeneratorTerm> bad{{{g.input(ad::Tensor::scalar(-1.0)), g.input(ad::Tensor::scalar(-1.0))},
                                          {1.0, 1.0, 1.0}}};
    CHECK_THROWS_AS(generator_loss(g, bad), ShapeError);
  }

  TEST_CASE("discriminator loss examples") {
    const std::vector<double> one{1.0}, half{0.5};
    CHECK(discriminator_loss(one, half) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(discriminator_loss(half, half) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // For a fixed label the loss over a grid of Q is smallest at Q = t.
    for (double t : {0.0, 0.25, 0.5, 0.8, 1.0}) {
      double best_q = -1.0, best = 1e300;
      for (int i = 1; i < 100; ++i) {
        const double q = i / 100.0;
        const std::vector<double> lab{t}, sc{q};
        const double l = discriminator_loss(lab, sc);
        if (l < best) {
          best = l;
          best_q = q;
        }
      }
      const double expected = std::clamp(t, 0.01, 0.99);
      CHECK(best_q == doctest::Approx(expected).epsilon(1e-9));
    }

    // Graph version averages tokens within a sample, then samples.
    ad::Graph g;
    auto s = [&](double v) { return g.input(ad::Tensor::scalar(v)); };
    const std::vector<DiscriminatorTerm> terms{{{s(0.5), s(0.5)}, 1.0}, {{s(0.25)}, 0.0}};
    const double expected = (std::log(2.0) + -std::log(0.75)) / 2.0;
    CHECK(discriminator_loss(g, terms).item() == doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("bootstrap target") {
    const ad::Tensor a = ad::Tensor::vector({1.0, 2.0, -1.0});
    CHECK(discriminator_bootstrap_target(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(discriminator_bootstrap_target(ad::Tensor::vector({1.0, 0.0}), ad::Tensor::vector({0.0, 3.0})) == 0.0);
    CHECK(discriminator_bootstrap_target(ad::Tensor::vector({1.0, 1.0}), ad::Tensor::vector({-1.0, -1.0})) == 0.0);
    CHECK(discriminator_bootstrap_target(ad::Tensor::vector({1.0, 0.0}), ad::Tensor::vector({1.0, 1.0})) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(discriminator_bootstrap_target(ad::Tensor::vector({0.0, 0.0}), a),
                    ShapeError);
    CHECK_THROWS_AS(discriminator_bootstrap_target(ad::Tensor::vector({0.0, 0.0}), ad::Tensor::vector({1.0, 0.0})),
                    DegenerateError);

    std::mt19937_64 rng(5);
    for (int i = 0; i < 1000; ++i) {
      const ad::Tensor x = testing::random_tensor({6}, rng), y = testing::random_tensor({6}, rng);
      const double s = discriminator_bootstrap_target(x, y);
      CHECK((s >= 0.0 && s <= 1.0));
    }
  }

  TEST_CASE("special case weights") {
    const SpecialCaseConfig mle = make_special_case_config(SpecialCase::mle, 0.3);
    CHECK(mle.ground_truth_weight == 1.0);
    CHECK(mle.argmax_weight == 0.0);
    CHECK(mle.other_weight == 0.0);
    const SpecialCaseConfig hard = make_special_case_config(SpecialCase::hard_bootstrap, 0.8);
    CHECK(hard.ground_truth_weight == 0.8);
    CHECK(hard.argmax_weight == doctest::Approx(0.2));
    CHECK(hard.other_weight == 0.0);
    CHECK_THROWS_AS(make_special_case_config(SpecialCase::hard_bootstrap, 1.2), InvalidHyperparameterError);
  }

  TEST_CASE("mle mode loss equals teacher-forced nll") {
    std::mt19937_64 data_rng(11);
    train::TrainingConfig c = testing::small_config();
    c.mode = SpecialCase::mle;
    const model::HredModel m(c.model_config());
    ad::Rng init(3);
    const ad::ParameterSet params = model::make_parameters(m.config(), init);
    for (int batch = 0; batch < 20; ++batch) {
      const auto examples = testing::random_examples(data_rng, c.vocab_size, 4);
      const auto mle = train::compute_step_gradients(m, params, c, examples, 100 + batch);
      CHECK(std::abs(mle.generator_loss - batch_nll(m, params, examples, c.tau)) <= 1e-12);
      CHECK(mle.discriminator_loss == 0.0);
      CHECK(mle.discriminator.empty());

      train::TrainingConfig hc = c;
      hc.mode = SpecialCase::hard_bootstrap;
      hc.beta = 1.0;
      const auto hard = train::compute_step_gradients(m, params, hc, examples, 100 + batch);
      CHECK(std::abs(hard.generator_loss - mle.generator_loss) <= 1e-12);
      CHECK(max_abs_diff(hard.generator, mle.generator) <= 1e-12);
    }
  }

  TEST_CASE("hard bootstrap adds the argmax term") {
    std::mt19937_64 data_rng(12);
    train::TrainingConfig c = testing::small_config();
    c.mode = SpecialCase::hard_bootstrap;
    c.beta = 0.8;
    const model::HredModel m(c.model_config());
    ad::Rng init(4);
    const ad::ParameterSet params = model::make_parameters(m.config(), init);
    const auto examples = testing::random_examples(data_rng, c.vocab_size, 3);
    const auto got = train::compute_step_gradients(m, params, c, examples, 7);

    double expected = 0.0;
    for (const auto& ex : examples) {
      ad::Graph g(params);
      const auto enc = m.encode(g, ex.context);
      model::DecodeOptions opt;
      opt.mode = model::DecodeMode::teacher_forcing;
      opt.ground_truth = ex.target;
      const auto tf = m.generate(g, enc, opt);
      expected -= 0.8 * tf.sequence_log_prob.item();
      for (std::size_t j = 0; j < tf.argmax.size(); ++j) {
        const auto y = static_cast<std::size_t>(tf.argmax[j]);
        expected -= 0.2 * std::log(tf.distributions[j].value()[y]);
        if (tf.argmax[j] == corpus::kEos) break;
      }
    }
    expected /= static_cast<double>(examples.size());
    CHECK(got.generator_loss == doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("word-level loss with equal weights equals the sequence-level loss") {
    ad::Graph g;
    std::vector<ad::Var> lps;
    for (double v : {-0.3, -1.2, -0.05}) lps.push_back(g.input(ad::Tensor::scalar(v)));
    const std::vector<GeneratorTerm> seq{{lps, {0.4}}}, word{{lps, {0.4, 0.4, 0.4}}};
    CHECK(generator_loss(g, seq).item() == doctest::Approx(generator_loss(g, word).item()).epsilon(1e-15));

    const ad::Var q = g.input(ad::Tensor::scalar(0.3));
    const std::vector<DiscriminatorTerm> one{{{q}, 0.6}}, many{{{q, q, q}, 0.6}};
    CHECK(discriminator_loss(g, one).item() == doctest::Approx(discriminator_loss(g, many).item()).epsilon(1e-15));
  }

  TEST_CASE("loss gradients match finite differences") {
    for (const auto& c : testing::loss_gradient_cases()) {
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const double err = c.worst_error(seed);
        INFO(c.name, " seed ", seed, " error ", err);
        CHECK(err < 1e-4);
      }
    }
  }
}
