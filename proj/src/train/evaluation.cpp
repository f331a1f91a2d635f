#include "aboots/train/evaluation.hpp"

#include "aboots/errors.hpp"
#include "aboots/train/trainer.hpp"

namespace aboots::train {

namespace {

constexpr std::uint64_t kDecodeStream = 0x2001;
constexpr std::uint64_t kProbeStream = 0x2002;
constexpr std::uint64_t kSearchStream = 0x2003;

}  // namespace

corpus::Sequence respond(const model::HredModel& model, const ad::ParameterSet& params,
                         std::span<const corpus::Sequence> context, const DecodeSettings& settings, ad::Rng* rng) {
  if (context.empty()) throw EmptyInputError("the dialogue context has no turns");
  ad::Graph g(params);
  const model::EncoderOutput enc = model.encode(g, context);
  model::DecodeOptions opt;
  opt.tau = settings.tau;
  opt.max_len = settings.max_len;
  if (settings.sample) {
    if (!rng) throw ContractError("sampled decoding requires an RNG stream");
    policy::PolicyConfig pc = settings.policy;
    if (pc.strategy == policy::Strategy::gaussian) pc.strategy = policy::Strategy::categorical;
    if (pc.top_k == 0 || pc.top_k > model.config().vocab_size)
      throw ConfigError("k must lie in [1, " + std::to_string(model.config().vocab_size) + "], got " +
                        std::to_string(pc.top_k));
    opt.mode = model::DecodeMode::sampled;
    opt.sampler = policy::make_sampler(pc);
    opt.rng = rng;
  } else {
    opt.mode = model::DecodeMode::greedy;
  }
  return model.generate(g, enc, opt).tokens;
}

std::vector<metrics::EvalPair> decode_pairs(const model::HredModel& model, const ad::ParameterSet& params,
                                            const corpus::Vocabulary& vocab,
                                            std::span<const corpus::DialogueExample> examples,
                                            const DecodeSettings& settings, std::uint64_t seed) {
  std::vector<metrics::EvalPair> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    ad::Rng rng(derive_seed(seed, kDecodeStream, i));
    const corpus::Sequence ids = respond(model, params, examples[i].context, settings, &rng);
    out.push_back({vocab.decode(ids), vocab.decode(examples[i].target)});
  }
  return out;
}

double teacher_forcing_nll(const model::HredModel& model, const ad::ParameterSet& params,
                           std::span<const corpus::DialogueExample> examples, double tau) {
  if (examples.empty()) throw EmptyInputError("no examples to score");
  double nll = 0.0;
  std::size_t tokens = 0;
  for (const corpus::DialogueExample& ex : examples) {
    ad::Graph g(params);
    const model::EncoderOutput enc = model.encode(g, ex.context);
    model::DecodeOptions opt;
    opt.mode = model::DecodeMode::teacher_forcing;
    opt.ground_truth = ex.target;
    opt.tau = tau;
    const model::Decoding dec = model.generate(g, enc, opt);
    for (const ad::Var& lp : dec.log_probs) nll -= lp.item();
    tokens += dec.log_probs.size();
  }
  return nll / static_cast<double>(tokens);
}

DiscriminatorProbe probe_discriminator(const model::HredModel& model, const ad::ParameterSet& params,
                                       std::span<const corpus::DialogueExample> examples, std::uint64_t seed) {
  if (examples.empty()) throw EmptyInputError("no examples to probe");
  DiscriminatorProbe out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const corpus::DialogueExample& ex = examples[i];
    corpus::Rng rng(derive_seed(seed, kProbeStream, i));
    const corpus::Sequence& distractor = corpus::sample_distractor(examples, rng, ex.target);
    ad::Graph g(params);
    const model::EncoderOutput enc = model.encode(g, ex.context);
    out.mean_q_truth += model.discriminate(g, ex.target, enc.context).score.item();
    out.mean_q_distractor += model.discriminate(g, distractor, enc.context).score.item();
  }
  out.mean_q_truth /= static_cast<double>(examples.size());
  out.mean_q_distractor /= static_cast<double>(examples.size());
  return out;
}

TopKSearch search_top_k(const model::HredModel& model, const ad::ParameterSet& params,
                        const corpus::Vocabulary& vocab, std::span<const corpus::DialogueExample> validation,
                        policy::Strategy strategy, double tau, std::uint64_t seed, std::size_t k_min,
                        std::size_t k_max) {
  if (validation.empty()) throw ConfigError("validation set is empty");
  if (k_min == 0 || k_min > k_max) throw ConfigError("invalid k range");
  k_max = std::min(k_max, model.config().vocab_size);
  TopKSearch out;
  out.best_bleu = -1.0;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    DecodeSettings settings;
    settings.sample = true;
    settings.policy = {strategy, k};
    settings.tau = tau;
    const double bleu = metrics::bleu2(decode_pairs(model, params, vocab, validation, settings,
                                                    derive_seed(seed, kSearchStream, k)));
    out.curve.emplace_back(k, bleu);
    if (bleu > out.best_bleu) {
      out.best_bleu = bleu;
      out.best_k = k;
    }
  }
  return out;
}

}  // namespace aboots::train
