#pragma once

#include <span>
#include <vector>

#include "aboots/autodiff/graph.hpp"
#include "aboots/autodiff/optim.hpp"
#include "aboots/model/hred.hpp"

namespace aboots::policy {

using ad::Graph;
using ad::Var;
using corpus::TokenId;

enum class Strategy { categorical, uniform, gaussian };

inline constexpr std::size_t kDefaultTopK = 10;

struct PolicyConfig {
  Strategy strategy = Strategy::categorical;
  std::size_t top_k = kDefaultTopK;  // ignored by the gaussian strategy
};

// Ids of the k most probable entries, most probable first; equal
// probabilities are ordered by lower id.
std::vector<TokenId> top_k_indices(const ad::Tensor& probabilities, std::size_t k);

// Samples from the top-k entries renormalized.
TokenId sample_top_k_categorical(const ad::Tensor& probabilities, std::size_t k, ad::Rng& rng);
// Samples uniformly among the top-k entries.
TokenId sample_top_k_uniform(const ad::Tensor& probabilities, std::size_t k, ad::Rng& rng);

// Sampler for the decoder. The gaussian strategy has no token sampler.
model::TokenSampler make_sampler(const PolicyConfig& config);

// REINFORCE surrogate -alpha * sum_j w_j log p(y_j). `weights` holds either a
// single sequence score Q or one score per token; scores are constants.
Var reinforce_loss(Graph& g, std::span<const Var> log_probs, std::span<const double> weights, double alpha);

// Expected embeddings sum_v p_j(v) E[v] for each step distribution.
std::vector<Var> relaxed_inputs(Graph& g, std::span<const Var> distributions);

struct DeterministicPolicyResult {
  Var surrogate;                      // -alpha * Q(relaxed y_max)
  model::Decoding decoding;           // greedy decode under the noisy initial state
  model::DiscriminatorOutput relaxed; // discriminator on the relaxed sequence
};

// Greedy decode with the noise added to the decoder initial state, then score
// the probability-weighted embedding mixes with the discriminator so the
// score is differentiable in the generator.
DeterministicPolicyResult deterministic_policy_loss(Graph& g, const model::HredModel& model,
                                                    const model::EncoderOutput& encoded, const ad::Tensor& noise,
                                                    double alpha, double tau);

// z ~ N(0, I) of dimension n.
ad::Tensor sample_noise(std::size_t n, ad::Rng& rng);

}  // namespace aboots::policy
