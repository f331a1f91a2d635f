#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aboots/autodiff/parameters.hpp"
#include "aboots/corpus/dataset.hpp"
#include "aboots/metrics/metrics.hpp"
#include "aboots/model/hred.hpp"
#include "aboots/policy/policy.hpp"

namespace aboots::train {

struct DecodeSettings {
  bool sample = false;  // false: greedy
  policy::PolicyConfig policy;
  double tau = 1.0;
  std::size_t max_len = 0;  // 0: model default
};

// One response for a dialogue context. `rng` is required when sampling.
corpus::Sequence respond(const model::HredModel& model, const ad::ParameterSet& params,
                         std::span<const corpus::Sequence> context, const DecodeSettings& settings,
                         ad::Rng* rng = nullptr);

// Decodes every example (per-example RNG streams derived from `seed`) and
// pairs the output with the reference, both detokenized without </s>.
std::vector<metrics::EvalPair> decode_pairs(const model::HredModel& model, const ad::ParameterSet& params,
                                            const corpus::Vocabulary& vocab,
                                            std::span<const corpus::DialogueExample> examples,
                                            const DecodeSettings& settings, std::uint64_t seed);

// Mean teacher-forced negative log-likelihood per target token (nats).
double teacher_forcing_nll(const model::HredModel& model, const ad::ParameterSet& params,
                           std::span<const corpus::DialogueExample> examples, double tau);

struct DiscriminatorProbe {
  double mean_q_truth = 0.0;
  double mean_q_distractor = 0.0;
};

// Mean discriminator score of each example's target and of a distractor drawn
// from the same set.
DiscriminatorProbe probe_discriminator(const model::HredModel& model, const ad::ParameterSet& params,
                                       std::span<const corpus::DialogueExample> examples, std::uint64_t seed);

struct TopKSearch {
  std::vector<std::pair<std::size_t, double>> curve;  // k -> BLEU-2
  std::size_t best_k = 1;
  double best_bleu = 0.0;
};

inline constexpr std::size_t kTopKSearchMin = 1;
inline constexpr std::size_t kTopKSearchMax = 20;

// Decodes the validation set once per k with top-k sampling and returns the
// BLEU-2 curve; ties go to the smaller k.
TopKSearch search_top_k(const model::HredModel& model, const ad::ParameterSet& params,
                        const corpus::Vocabulary& vocab, std::span<const corpus::DialogueExample> validation,
                        policy::Strategy strategy, double tau, std::uint64_t seed,
                        std::size_t k_min = kTopKSearchMin, std::size_t k_max = kTopKSearchMax);

}  // namespace aboots::train
