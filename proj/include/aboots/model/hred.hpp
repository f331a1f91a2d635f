#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aboots/autodiff/graph.hpp"
#include "aboots/autodiff/optim.hpp"
#include "aboots/corpus/vocabulary.hpp"

namespace aboots::model {

using ad::Graph;
using ad::Var;
using corpus::Sequence;
using corpus::TokenId;

enum class DiscriminationLevel { utterance, word };

struct ModelConfig {
  std::size_t vocab_size = corpus::kDefaultVocabularySize;
  std::size_t h_dim = 512;
  std::size_t layers = 3;
  DiscriminationLevel level = DiscriminationLevel::word;
  std::size_t max_decode_len = 30;
};

// Creates every model parameter with Xavier-uniform values. The embedding
// matrix (vocab x h_dim) is registered once as "embedding" and used for the
// encoder, decoder and discriminator inputs and the decoder output projection.
ad::ParameterSet make_parameters(const ModelConfig& config, ad::Rng& rng);

inline constexpr const char* kEmbedding = "embedding";
inline constexpr const char* kOutputBias = "gen.out.b";

// Per-token encoder states of one turn and their L2 pool.
struct TurnEncoding {
  std::vector<Var> states;
  Var summary;
};

struct EncoderOutput {
  std::vector<Var> memory;          // states of the most recent context turn
  std::vector<Var> summaries;       // one per context turn
  std::vector<Var> context_layers;  // context RNN state per layer
  Var context;                      // top layer, the dialogue state
};

struct AttentionResult {
  Var weights;
  Var context;
};

enum class DecodeMode { teacher_forcing, greedy, sampled };

using TokenSampler = std::function<TokenId(const ad::Tensor& probabilities, ad::Rng& rng)>;

struct DecodeOptions {
  DecodeMode mode = DecodeMode::greedy;
  std::span<const TokenId> ground_truth;  // required for teacher forcing
  double tau = 1.0;
  TokenSampler sampler;  // required for sampled mode
  ad::Rng* rng = nullptr;
  std::optional<ad::Tensor> noise;  // added to the decoder initial state
  std::size_t max_len = 0;          // 0: ModelConfig::max_decode_len
};

struct Decoding {
  Sequence tokens;                       // emitted (teacher forcing: the ground truth)
  Sequence argmax;                       // per-step most probable token
  std::vector<Var> distributions;        // per-step softmax(logits / tau)
  std::vector<Var> log_probs;            // per-step log p(token)
  std::vector<std::vector<double>> attention;
  Var sequence_log_prob;
};

struct DiscriminatorOutput {
  Var score;                     // utterance Q, or mean of token scores at word level
  std::vector<Var> token_scores; // word level only
  Var features;                  // h_D: representation before the logit projection
};

class HredModel {
 public:
  explicit HredModel(ModelConfig config);

  const ModelConfig& config() const noexcept { return config_; }

  std::vector<Var> embed(Graph& g, std::span<const TokenId> ids) const;

  TurnEncoding encode_turn(Graph& g, std::span<const TokenId> ids) const;
  // One step of the context RNN; `previous` holds one state per layer, or is
  // empty for the first turn (zero state).
  std::vector<Var> update_context(Graph& g, Var summary, std::span<const Var> previous) const;
  EncoderOutput encode(Graph& g, std::span<const Sequence> context) const;

  AttentionResult attention(Graph& g, Var query, std::span<const Var> memory) const;

  Decoding generate(Graph& g, const EncoderOutput& encoded, const DecodeOptions& options) const;

  DiscriminatorOutput discriminate_utterance(Graph& g, std::span<const Var> inputs, Var context) const;
  DiscriminatorOutput discriminate_words(Graph& g, std::span<const Var> inputs, Var context) const;
  // Dispatches on ModelConfig::level.
  DiscriminatorOutput discriminate(Graph& g, std::span<const Var> inputs, Var context) const;
  DiscriminatorOutput discriminate(Graph& g, std::span<const TokenId> response, Var context) const;

 private:
  struct Gru {
    Var W, U, b;
  };
  Gru gru(Graph& g, const std::string& prefix) const;
  std::vector<Var> bidirectional_stack(Graph& g, const std::string& prefix, std::vector<Var> inputs,
                                       std::optional<Var> initial) const;
  AttentionResult attend(Graph& g, Var query, std::span<const Var> memory, std::span<const Var> keys) const;
  std::vector<Var> attention_keys(Graph& g, std::span<const Var> memory) const;

  ModelConfig config_;
};

TokenId argmax(const ad::Tensor& values);

}  // namespace aboots::model
