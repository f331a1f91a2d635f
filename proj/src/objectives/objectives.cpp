#include "aboots/objectives/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "aboots/autodiff/ops.hpp"
#include "aboots/errors.hpp"

namespace aboots::objectives {

void Hyperparams::validate() const {
  if (!(alpha >= 0.0)) throw InvalidHyperparameterError("alpha must be >= 0");
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidHyperparameterError("beta must lie in [0, 1]");
  if (!(tau > 0.0)) throw InvalidHyperparameterError("tau must be positive");
}

double generator_target(SampleKind kind, double q, const Hyperparams& hp) {
  switch (kind) {
    case SampleKind::ground_truth:
      return hp.beta;
    case SampleKind::tf_argmax:
      return 0.0;
    case SampleKind::distractor:
    case SampleKind::policy_sample:
      if (!(q >= 0.0 && q <= 1.0)) throw ContractError("generator_target: Q outside [0, 1]");
      return hp.alpha * q;
  }
  return 0.0;
}

double generator_target_word(SampleKind kind, double d, const Hyperparams& hp, WordCoefficient coefficient) {
  switch (kind) {
    case SampleKind::ground_truth:
      return hp.beta;
    case SampleKind::tf_argmax:
      return 0.0;
    case SampleKind::distractor:
    case SampleKind::policy_sample:
      return (coefficient == WordCoefficient::alpha ? hp.alpha : 1.0 - hp.beta) * d;
  }
  return 0.0;
}

double discriminator_target(SampleKind kind, const Hyperparams& hp) {
  switch (kind) {
    case SampleKind::ground_truth:
      return hp.beta;
    case SampleKind::tf_argmax:
    case SampleKind::distractor:
      return 0.0;
    case SampleKind::policy_sample:
      break;
  }
  throw ContractError("policy samples take a bootstrapped discriminator target, not a hard label");
}

double discriminator_bootstrap_target(const ad::Tensor& a, const ad::Tensor& b) {
  ad::require_same_shape(a, b, "discriminator_bootstrap_target");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DegenerateError("cosine similarity of a zero feature vector");
  return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

SpecialCaseConfig make_special_case_config(SpecialCase kind, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidHyperparameterError("beta must lie in [0, 1]");
  switch (kind) {
    case SpecialCase::mle:
      return {kind, 1.0, 0.0, 0.0};
    case SpecialCase::hard_bootstrap:
      return {kind, beta, 1.0 - beta, 0.0};
    case SpecialCase::none:
      break;
  }
  return {SpecialCase::none, beta, 0.0, 0.0};
}

Var generator_loss(Graph& g, std::span<const GeneratorTerm> terms) {
  std::vector<Var> parts;
  for (const GeneratorTerm& t : terms) {
    if (t.weights.size() != 1 && t.weights.size() != t.log_probs.size())
      throw ShapeError("generator_loss: need one weight per sample or per token");
    for (std::size_t j = 0; j < t.log_probs.size(); ++j) {
      const double w = t.weights.size() == 1 ? t.weights[0] : t.weights[j];
      if (w != 0.0) parts.push_back(ad::scale(t.log_probs[j], -w));
    }
  }
  if (parts.empty()) return g.input(ad::Tensor::scalar(0.0));
  return ad::add_n(parts);
}

double generator_loss(std::span<const double> targets, std::span<const double> log_probs) {
  if (targets.size() != log_probs.size()) throw ShapeError("generator_loss: targets and log-probs differ in length");
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (targets[i] != 0.0) loss -= targets[i] * log_probs[i];
  return loss;
}

Var discriminator_loss(Graph& g, std::span<const DiscriminatorTerm> terms) {
  if (terms.empty()) return g.input(ad::Tensor::scalar(0.0));
  std::vector<Var> per_sample;
  for (const DiscriminatorTerm& t : terms) {
    if (t.scores.empty()) throw EmptyInputError("discriminator_loss: sample without scores");
    std::vector<Var> bce;
    for (Var q : t.scores) bce.push_back(ad::binary_cross_entropy(q, t.label));
    per_sample.push_back(ad::scale(ad::add_n(bce), 1.0 / static_cast<double>(bce.size())));
  }
  return ad::scale(ad::add_n(per_sample), 1.0 / static_cast<double>(per_sample.size()));
}

double discriminator_loss(std::span<const double> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw ShapeError("discriminator_loss: labels and scores differ in length");
  if (labels.empty()) return 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double q = std::clamp(scores[i], ad::kProbabilityClamp, 1.0 - ad::kProbabilityClamp);
    loss -= labels[i] * std::log(q) + (1.0 - labels[i]) * std::log(1.0 - q);
  }
  return loss / static_cast<double>(labels.size());
}

}  // namespace aboots::objectives
