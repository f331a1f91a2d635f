#include "aboots/policy/policy.hpp"

#include <algorithm>
#include <numeric>

#include "aboots/autodiff/ops.hpp"
#include "aboots/errors.hpp"

namespace aboots::policy {

std::vector<TokenId> top_k_indices(const ad::Tensor& p, std::size_t k) {
  if (k < 1 || k > p.size())
    throw ConfigError("top_k must lie in [1, " + std::to_string(p.size()) + "], got " + std::to_string(k));
  std::vector<TokenId> ids(p.size());
  std::iota(ids.begin(), ids.end(), TokenId{0});
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(), [&](TokenId a, TokenId b) {
    const double pa = p[static_cast<std::size_t>(a)], pb = p[static_cast<std::size_t>(b)];
    return pa != pb ? pa > pb : a < b;
  });
  ids.resize(k);
  return ids;
}

TokenId sample_top_k_categorical(const ad::Tensor& p, std::size_t k, ad::Rng& rng) {
  const std::vector<TokenId> ids = top_k_indices(p, k);
  double total = 0.0;
  for (TokenId id : ids) total += p[static_cast<std::size_t>(id)];
  std::uniform_real_distribution<double> u(0.0, total);
  const double target = u(rng);
  double acc = 0.0;
  for (TokenId id : ids) {
    acc += p[static_cast<std::size_t>(id)];
    if (target < acc) return id;
  }
  return ids.back();
}

TokenId sample_top_k_uniform(const ad::Tensor& p, std::size_t k, ad::Rng& rng) {
  const std::vector<TokenId> ids = top_k_indices(p, k);
  std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
  return ids[pick(rng)];
}

model::TokenSampler make_sampler(const PolicyConfig& config) {
  const std::size_t k = config.top_k;
  switch (config.strategy) {
    case Strategy::categorical:
      return [k](const ad::Tensor& p, ad::Rng& rng) { return sample_top_k_categorical(p, k, rng); };
    case Strategy::uniform:
      return [k](const ad::Tensor& p, ad::Rng& rng) { return sample_top_k_uniform(p, k, rng); };
    case Strategy::gaussian:
      break;
  }
  throw ContractError("the gaussian strategy decodes greedily and has no token sampler");
}

Var reinforce_loss(Graph& g, std::span<const Var> log_probs, std::span<const double> weights, double alpha) {
  if (weights.size() != 1 && weights.size() != log_probs.size())
    throw ShapeError("reinforce_loss: need one score per sequence or per token");
  std::vector<Var> parts;
  for (std::size_t j = 0; j < log_probs.size(); ++j) {
    const double w = alpha * (weights.size() == 1 ? weights[0] : weights[j]);
    if (w != 0.0) parts.push_back(ad::scale(log_probs[j], -w));
  }
  if (parts.empty()) return g.input(ad::Tensor::scalar(0.0));
  return ad::add_n(parts);
}

std::vector<Var> relaxed_inputs(Graph& g, std::span<const Var> distributions) {
  Var E = g.param(model::kEmbedding);
  std::vector<Var> out;
  out.reserve(distributions.size());
  for (Var p : distributions) out.push_back(ad::mat_t_vec(E, p));
  return out;
}

DeterministicPolicyResult deterministic_policy_loss(Graph& g, const model::HredModel& model,
                                                    const model::EncoderOutput& encoded, const ad::Tensor& noise,
                                                    double alpha, double tau) {
  model::DecodeOptions opt;
  opt.mode = model::DecodeMode::greedy;
  opt.tau = tau;
  opt.noise = noise;
  DeterministicPolicyResult out;
  out.decoding = model.generate(g, encoded, opt);
  const std::vector<Var> inputs = relaxed_inputs(g, out.decoding.distributions);
  out.relaxed = model.discriminate(g, inputs, encoded.context);
  out.surrogate = ad::scale(out.relaxed.score, -alpha);
  return out;
}

ad::Tensor sample_noise(std::size_t n, ad::Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ad::Tensor z({n});
  for (double& v : z.values()) v = normal(rng);
  return z;
}

}  // namespace aboots::policy
