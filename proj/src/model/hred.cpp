#include "aboots/model/hred.hpp"

#include <cmath>

#include "aboots/autodiff/ops.hpp"
#include "aboots/errors.hpp"

namespace aboots::model {

namespace {

std::string layer_prefix(const char* base, std::size_t layer) { return std::string(base) + ".l" + std::to_string(layer); }

void add_gru(ad::ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t h, ad::Group group,
             ad::Rng& rng) {
  params.add(prefix + ".W", group, ad::xavier_uniform_init({3 * h, in}, rng));
  params.add(prefix + ".U", group, ad::xavier_uniform_init({3 * h, h}, rng));
  params.add(prefix + ".b", group, ad::xavier_uniform_init({3 * h}, rng));
}

void add_linear(ad::ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t out, ad::Group group,
                ad::Rng& rng) {
  params.add(prefix + ".W", group, ad::xavier_uniform_init({out, in}, rng));
  params.add(prefix + ".b", group, ad::xavier_uniform_init({out}, rng));
}

Var zeros(Graph& g, std::size_t n) { return g.input(ad::Tensor::zeros({n})); }

}  // namespace

TokenId argmax(const ad::Tensor& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return static_cast<TokenId>(best);
}

ad::ParameterSet make_parameters(const ModelConfig& c, ad::Rng& rng) {
  if (c.h_dim == 0 || c.layers == 0) throw ConfigError("model dimensions must be positive");
  if (c.vocab_size <= corpus::kReservedTokens) throw ConfigError("vocabulary must contain more than the reserved ids");
  const std::size_t h = c.h_dim;
  const auto G = ad::Group::generator;
  const auto D = ad::Group::discriminator;
  ad::ParameterSet p;
  p.add(kEmbedding, G, ad::xavier_uniform_init({c.vocab_size, h}, rng));
  p.add(kOutputBias, G, ad::xavier_uniform_init({c.vocab_size}, rng));
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::string e = layer_prefix("enc", l);
    add_gru(p, e + ".fwd", h, h, G, rng);
    add_gru(p, e + ".bwd", h, h, G, rng);
    add_linear(p, e + ".proj", 2 * h, h, G, rng);
  }
  for (std::size_t l = 0; l < c.layers; ++l) add_gru(p, layer_prefix("ctx", l), h, h, G, rng);
  for (std::size_t l = 0; l < c.layers; ++l) add_gru(p, layer_prefix("dec", l), l == 0 ? 3 * h : h, h, G, rng);
  p.add("att.query", G, ad::xavier_uniform_init({h, h}, rng));
  p.add("att.memory", G, ad::xavier_uniform_init({h, h}, rng));
  p.add("att.b", G, ad::xavier_uniform_init({h}, rng));
  p.add("att.v", G, ad::xavier_uniform_init({h}, rng));
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::string d = layer_prefix("disc", l);
    if (c.level == DiscriminationLevel::utterance) {
      add_gru(p, d, h, h, D, rng);
    } else {
      add_gru(p, d + ".fwd", h, h, D, rng);
      add_gru(p, d + ".bwd", h, h, D, rng);
      add_linear(p, d + ".proj", 2 * h, h, D, rng);
    }
  }
  add_linear(p, "disc.out", h, 1, D, rng);
  return p;
}

HredModel::HredModel(ModelConfig config) : config_(config) {
  if (config_.h_dim == 0 || config_.layers == 0) throw ConfigError("model dimensions must be positive");
}

HredModel::Gru HredModel::gru(Graph& g, const std::string& prefix) const {
  return {g.param(prefix + ".W"), g.param(prefix + ".U"), g.param(prefix + ".b")};
}

std::vector<Var> HredModel::embed(Graph& g, std::span<const TokenId> ids) const {
  Var E = g.param(kEmbedding);
  std::vector<Var> out;
  out.reserve(ids.size());
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size)
      throw ContractError("token id " + std::to_string(id) + " outside vocabulary");
    out.push_back(ad::row(E, static_cast<std::size_t>(id)));
  }
  return out;
}

std::vector<Var> HredModel::bidirectional_stack(Graph& g, const std::string& prefix, std::vector<Var> inputs,
                                                std::optional<Var> initial) const {
  const std::size_t h = config_.h_dim;
  const std::size_t J = inputs.size();
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = layer_prefix(prefix.c_str(), l);
    const Gru fwd = gru(g, p + ".fwd");
    const Gru bwd = gru(g, p + ".bwd");
    Var pw = g.param(p + ".proj.W");
    Var pb = g.param(p + ".proj.b");
    Var start = initial ? *initial : zeros(g, h);
    std::vector<Var> f(J), b(J);
    Var state = start;
    for (std::size_t j = 0; j < J; ++j) f[j] = state = ad::gru_cell(inputs[j], state, fwd.W, fwd.U, fwd.b);
    state = start;
    for (std::size_t j = J; j-- > 0;) b[j] = state = ad::gru_cell(inputs[j], state, bwd.W, bwd.U, bwd.b);
    for (std::size_t j = 0; j < J; ++j) inputs[j] = ad::affine(pw, ad::concat({f[j], b[j]}), pb);
  }
  return inputs;
}

TurnEncoding HredModel::encode_turn(Graph& g, std::span<const TokenId> ids) const {
  if (ids.empty()) throw EmptyInputError("encode_turn: empty turn");
  TurnEncoding out;
  out.states = bidirectional_stack(g, "enc", embed(g, ids), std::nullopt);
  out.summary = ad::l2_pool(out.states);
  return out;
}

std::vector<Var> HredModel::update_context(Graph& g, Var summary, std::span<const Var> previous) const {
  if (!previous.empty() && previous.size() != config_.layers)
    throw ShapeError("update_context: expected one previous state per layer");
  std::vector<Var> next;
  Var input = summary;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const Gru cell = gru(g, layer_prefix("ctx", l));
    Var prev = previous.empty() ? zeros(g, config_.h_dim) : previous[l];
    input = ad::gru_cell(input, prev, cell.W, cell.U, cell.b);
    next.push_back(input);
  }
  return next;
}

EncoderOutput HredModel::encode(Graph& g, std::span<const Sequence> context) const {
  if (context.empty()) throw EmptyInputError("encode: dialogue context has no turns");
  EncoderOutput out;
  for (const Sequence& turn : context) {
    TurnEncoding t = encode_turn(g, turn);
    out.summaries.push_back(t.summary);
    out.context_layers = update_context(g, t.summary, out.context_layers);
    out.memory = std::move(t.states);
  }
  out.context = out.context_layers.back();
  return out;
}

std::vector<Var> HredModel::attention_keys(Graph& g, std::span<const Var> memory) const {
  Var Wm = g.param("att.memory");
  std::vector<Var> keys;
  keys.reserve(memory.size());
  for (Var m : memory) keys.push_back(ad::matvec(Wm, m));
  return keys;
}

AttentionResult HredModel::attend(Graph& g, Var query, std::span<const Var> memory, std::span<const Var> keys) const {
  if (memory.empty()) throw EmptyInputError("attention: empty memory");
  Var q = ad::affine(g.param("att.query"), query, g.param("att.b"));
  Var v = g.param("att.v");
  std::vector<Var> scores;
  scores.reserve(keys.size());
  for (Var k : keys) scores.push_back(ad::dot(v, ad::tanh(ad::add(q, k))));
  AttentionResult out;
  out.weights = ad::softmax(ad::concat(scores), 1.0);
  out.context = ad::weighted_sum(out.weights, memory);
  return out;
}

AttentionResult HredModel::attention(Graph& g, Var query, std::span<const Var> memory) const {
  if (memory.empty()) throw EmptyInputError("attention: empty memory");
  const std::vector<Var> keys = attention_keys(g, memory);
  return attend(g, query, memory, keys);
}

Decoding HredModel::generate(Graph& g, const EncoderOutput& enc, const DecodeOptions& opt) const {
  if (opt.mode == DecodeMode::teacher_forcing && opt.ground_truth.empty())
    throw ContractError("teacher forcing requires the ground-truth response");
  if (opt.mode == DecodeMode::sampled && (!opt.sampler || !opt.rng))
    throw ContractError("sampled decoding requires a sampler and an RNG stream");
  const std::size_t h = config_.h_dim;
  const std::size_t max_len = opt.mode == DecodeMode::teacher_forcing
                                  ? opt.ground_truth.size()
                                  : (opt.max_len ? opt.max_len : config_.max_decode_len);

  Var init = enc.context;
  if (opt.noise) {
    if (opt.noise->size() != h) throw ShapeError("decoder noise must have h_dim entries");
    init = ad::add(init, g.input(*opt.noise));
  }
  std::vector<Var> state(config_.layers, init);
  std::vector<Gru> cells;
  for (std::size_t l = 0; l < config_.layers; ++l) cells.push_back(gru(g, layer_prefix("dec", l)));
  const std::vector<Var> keys = attention_keys(g, enc.memory);
  Var E = g.param(kEmbedding);
  Var bias = g.param(kOutputBias);

  Decoding out;
  TokenId previous = corpus::kSos;
  for (std::size_t j = 0; j < max_len; ++j) {
    AttentionResult att = attend(g, state.back(), enc.memory, keys);
    Var input = ad::concat({ad::row(E, static_cast<std::size_t>(previous)), att.context, enc.context});
    for (std::size_t l = 0; l < config_.layers; ++l) {
      state[l] = ad::gru_cell(input, state[l], cells[l].W, cells[l].U, cells[l].b);
      input = state[l];
    }
    Var logits = ad::affine(E, state.back(), bias);
    Var log_p = ad::log_softmax(logits, opt.tau);
    Var p = ad::softmax(logits, opt.tau);
    const TokenId best = argmax(p.value());

    TokenId chosen = best;
    if (opt.mode == DecodeMode::teacher_forcing) {
      chosen = opt.ground_truth[j];
    } else if (opt.mode == DecodeMode::sampled) {
      chosen = opt.sampler(p.value(), *opt.rng);
    }
    if (chosen < 0 || static_cast<std::size_t>(chosen) >= config_.vocab_size)
      throw ContractError("decoded token outside vocabulary");

    out.tokens.push_back(chosen);
    out.argmax.push_back(best);
    out.distributions.push_back(p);
    out.log_probs.push_back(ad::pick(log_p, static_cast<std::size_t>(chosen)));
    const auto w = att.weights.value().values();
    out.attention.emplace_back(w.begin(), w.end());
    previous = chosen;
    if (opt.mode != DecodeMode::teacher_forcing && chosen == corpus::kEos) break;
  }
  out.sequence_log_prob = ad::add_n(out.log_probs);
  return out;
}

DiscriminatorOutput HredModel::discriminate_utterance(Graph& g, std::span<const Var> inputs, Var context) const {
  if (inputs.empty()) throw EmptyInputError("discriminate_utterance: empty response");
  Var top;
  std::vector<Var> layer_inputs(inputs.begin(), inputs.end());
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const Gru cell = gru(g, layer_prefix("disc", l));
    Var state = context;
    for (Var& x : layer_inputs) x = state = ad::gru_cell(x, state, cell.W, cell.U, cell.b);
  }
  top = layer_inputs.back();
  DiscriminatorOutput out;
  out.features = top;
  out.score = ad::sigmoid(ad::affine(g.param("disc.out.W"), top, g.param("disc.out.b")));
  return out;
}

DiscriminatorOutput HredModel::discriminate_words(Graph& g, std::span<const Var> inputs, Var context) const {
  if (inputs.empty()) throw EmptyInputError("discriminate_words: empty response");
  std::vector<Var> states = bidirectional_stack(g, "disc", std::vector<Var>(inputs.begin(), inputs.end()), context);
  Var W = g.param("disc.out.W");
  Var b = g.param("disc.out.b");
  DiscriminatorOutput out;
  for (Var s : states) out.token_scores.push_back(ad::sigmoid(ad::affine(W, s, b)));
  out.features = ad::l2_pool(states);
  out.score = ad::scale(ad::add_n(out.token_scores), 1.0 / static_cast<double>(states.size()));
  return out;
}

DiscriminatorOutput HredModel::discriminate(Graph& g, std::span<const Var> inputs, Var context) const {
  return config_.level == DiscriminationLevel::utterance ? discriminate_utterance(g, inputs, context)
                                                         : discriminate_words(g, inputs, context);
}

DiscriminatorOutput HredModel::discriminate(Graph& g, std::span<const TokenId> response, Var context) const {
  if (response.empty()) throw EmptyInputError("discriminator: empty response");
  const std::vector<Var> inputs = embed(g, response);
  return discriminate(g, inputs, context);
}

}  // namespace aboots::model
