#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "aboots/corpus/dataset.hpp"
#include "aboots/model/hred.hpp"
#include "aboots/objectives/objectives.hpp"
#include "aboots/policy/policy.hpp"

namespace aboots::train {

// Every run setting. Defaults are the full-scale values; desk runs override
// them from a config file.
struct TrainingConfig {
  std::size_t h_dim = 512;
  std::size_t layers = 3;
  std::size_t vocab_size = corpus::kDefaultVocabularySize;
  double alpha = 1.0;
  double beta = 1.0;
  double tau = 1.0;
  std::size_t top_k = policy::kDefaultTopK;
  std::size_t batch_size = 64;
  double lr = 0.5;
  double lr_decay = 0.99;
  double clip = 5.0;
  std::size_t max_epochs = 100;
  std::size_t max_steps = 0;  // 0: bounded by max_epochs only
  std::uint64_t seed = 1;
  policy::Strategy strategy = policy::Strategy::categorical;
  model::DiscriminationLevel level = model::DiscriminationLevel::word;
  bool disc_bootstrap = true;
  objectives::SpecialCase mode = objectives::SpecialCase::none;
  objectives::WordCoefficient word_coefficient = objectives::WordCoefficient::alpha;
  std::size_t max_turn_len = 30;
  std::size_t max_turns = 3;
  std::size_t max_decode_len = 30;
  std::size_t checkpoint_every = 1000;  // 0: only at the end
  std::size_t validate_every = 1000;    // 0: never
  std::size_t log_every = 1;

  void validate() const;

  model::ModelConfig model_config() const;
  objectives::Hyperparams hyperparams() const { return {alpha, beta, tau}; }
  policy::PolicyConfig policy_config() const { return {strategy, top_k}; }
  corpus::SequenceLimits limits() const { return {max_turn_len, max_turns}; }
};

// Flat `key = value` lines; `#` starts a comment. Unknown keys and malformed
// values raise ConfigError naming the offending line.
TrainingConfig parse_config(std::istream& in, std::string_view source = "<config>");
TrainingConfig read_config(const std::filesystem::path& path);
void write_config(const TrainingConfig& config, std::ostream& out);
void write_config(const TrainingConfig& config, const std::filesystem::path& path);

// Applies one `key=value` setting.
void set_config_value(TrainingConfig& config, std::string_view key, std::string_view value);

std::string strategy_name(policy::Strategy s);
std::string level_name(model::DiscriminationLevel l);
std::string mode_name(objectives::SpecialCase m);

}  // namespace aboots::train
