#pragma once

#include <span>
#include <vector>

#include "aboots/autodiff/graph.hpp"

namespace aboots::objectives {

using ad::Graph;
using ad::Var;

struct Hyperparams {
  double alpha = 1.0;  // weight of the discriminator score on policy samples
  double beta = 1.0;   // weight of the ground truth
  double tau = 1.0;    // softmax temperature

  void validate() const;
};

enum class SampleKind { ground_truth, tf_argmax, distractor, policy_sample };

// How the "otherwise" branch of the per-token generator target is scaled.
enum class WordCoefficient { alpha, one_minus_beta };

// beta for the ground truth, 0 for the teacher-forcing argmax, alpha*Q for a
// policy sample. Q must lie in [0, 1] for policy samples.
double generator_target(SampleKind kind, double q, const Hyperparams& hp);

// Per-token version; `d` is the token-level discriminator score.
double generator_target_word(SampleKind kind, double d, const Hyperparams& hp,
                             WordCoefficient coefficient = WordCoefficient::alpha);

// beta for the ground truth, 0 for the teacher-forcing argmax and distractors.
double discriminator_target(SampleKind kind, const Hyperparams& hp);

// max(0, cosine(a, b)): soft discriminator label for a generator sample,
// computed from discriminator features. A constant; no gradient flows back.
double discriminator_bootstrap_target(const ad::Tensor& sample_features, const ad::Tensor& truth_features);

enum class SpecialCase { none, mle, hard_bootstrap };

// Fixed generator weights of the classic objectives that bootstrapping
// generalizes. mle: ground truth 1; hard bootstrap: ground truth beta and the
// model's argmax 1-beta. Everything else weighs 0.
struct SpecialCaseConfig {
  SpecialCase kind = SpecialCase::none;
  double ground_truth_weight = 1.0;
  double argmax_weight = 0.0;
  double other_weight = 0.0;
};

SpecialCaseConfig make_special_case_config(SpecialCase kind, double beta);

// One weighted sample: token log-probabilities and either a single sequence
// weight or one weight per token.
struct GeneratorTerm {
  std::vector<Var> log_probs;
  std::vector<double> weights;
};

// -sum over samples and tokens of t * log p for one example. Zero-weight terms
// are skipped; all-zero targets give a constant 0.
Var generator_loss(Graph& g, std::span<const GeneratorTerm> terms);
// Plain version: -sum t_i * log p_i.
double generator_loss(std::span<const double> targets, std::span<const double> log_probs);

// One discriminator sample: a single utterance score or one score per token,
// sharing the label.
struct DiscriminatorTerm {
  std::vector<Var> scores;
  double label = 0.0;
};

// Binary cross-entropy averaged over tokens within a sample, then over samples.
Var discriminator_loss(Graph& g, std::span<const DiscriminatorTerm> terms);
// Plain version, averaged over samples.
double discriminator_loss(std::span<const double> labels, std::span<const double> scores);

}  // namespace aboots::objectives
