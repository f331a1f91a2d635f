#include "aboots/train/config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>

#include "aboots/errors.hpp"

namespace aboots::train {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::size_t parse_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError("'" + std::string(key) + "' expects a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(std::string(v), &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError("'" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
  }
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("'" + std::string(key) + "' expects true/false, got '" + std::string(v) + "'");
}

}  // namespace

std::string strategy_name(policy::Strategy s) {
  switch (s) {
    case policy::Strategy::categorical: return "categorical";
    case policy::Strategy::uniform: return "uniform";
    case policy::Strategy::gaussian: return "gaussian";
  }
  return "?";
}

std::string level_name(model::DiscriminationLevel l) {
  return l == model::DiscriminationLevel::word ? "word" : "utterance";
}

std::string mode_name(objectives::SpecialCase m) {
  switch (m) {
    case objectives::SpecialCase::none: return "none";
    case objectives::SpecialCase::mle: return "mle";
    case objectives::SpecialCase::hard_bootstrap: return "hard";
  }
  return "?";
}

void set_config_value(TrainingConfig& c, std::string_view key, std::string_view v) {
  if (key == "h_dim") c.h_dim = parse_size(key, v);
  else if (key == "layers") c.layers = parse_size(key, v);
  else if (key == "vocab_size") c.vocab_size = parse_size(key, v);
  else if (key == "alpha") c.alpha = parse_double(key, v);
  else if (key == "beta") c.beta = parse_double(key, v);
  else if (key == "tau") c.tau = parse_double(key, v);
  else if (key == "top_k") c.top_k = parse_size(key, v);
  else if (key == "batch_size") c.batch_size = parse_size(key, v);
  else if (key == "lr") c.lr = parse_double(key, v);
  else if (key == "lr_decay") c.lr_decay = parse_double(key, v);
  else if (key == "clip") c.clip = parse_double(key, v);
  else if (key == "max_epochs") c.max_epochs = parse_size(key, v);
  else if (key == "max_steps") c.max_steps = parse_size(key, v);
  else if (key == "seed") c.seed = parse_size(key, v);
  else if (key == "strategy") {
    if (v == "categorical" || v == "cat") c.strategy = policy::Strategy::categorical;
    else if (v == "uniform" || v == "uni") c.strategy = policy::Strategy::uniform;
    else if (v == "gaussian" || v == "gau") c.strategy = policy::Strategy::gaussian;
    else throw ConfigError("'strategy' must be categorical, uniform or gaussian, got '" + std::string(v) + "'");
  } else if (key == "level") {
    if (v == "word" || v == "w") c.level = model::DiscriminationLevel::word;
    else if (v == "utterance" || v == "u") c.level = model::DiscriminationLevel::utterance;
    else throw ConfigError("'level' must be word or utterance, got '" + std::string(v) + "'");
  } else if (key == "disc_bootstrap") c.disc_bootstrap = parse_bool(key, v);
  else if (key == "mode") {
    if (v == "none") c.mode = objectives::SpecialCase::none;
    else if (v == "mle") c.mode = objectives::SpecialCase::mle;
    else if (v == "hard" || v == "hard-bootstrap") c.mode = objectives::SpecialCase::hard_bootstrap;
    else throw ConfigError("'mode' must be none, mle or hard, got '" + std::string(v) + "'");
  } else if (key == "word_coefficient") {
    if (v == "alpha") c.word_coefficient = objectives::WordCoefficient::alpha;
    else if (v == "one_minus_beta") c.word_coefficient = objectives::WordCoefficient::one_minus_beta;
    else throw ConfigError("'word_coefficient' must be alpha or one_minus_beta, got '" + std::string(v) + "'");
  } else if (key == "max_turn_len") c.max_turn_len = parse_size(key, v);
  else if (key == "max_turns") c.max_turns = parse_size(key, v);
  else if (key == "max_decode_len") c.max_decode_len = parse_size(key, v);
  else if (key == "checkpoint_every") c.checkpoint_every = parse_size(key, v);
  else if (key == "validate_every") c.validate_every = parse_size(key, v);
  else if (key == "log_every") c.log_every = parse_size(key, v);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void TrainingConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(h_dim, "h_dim");
  positive(layers, "layers");
  positive(batch_size, "batch_size");
  positive(top_k, "top_k");
  positive(max_turn_len, "max_turn_len");
  positive(max_decode_len, "max_decode_len");
  positive(log_every, "log_every");
  if (vocab_size <= corpus::kReservedTokens) throw ConfigError("vocab_size must exceed the reserved ids");
  if (top_k > vocab_size) throw ConfigError("top_k must not exceed vocab_size");
  if (max_turns < 2) throw ConfigError("max_turns must be at least 2");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(lr_decay > 0.0 && lr_decay < 1.0)) throw ConfigError("lr_decay must lie in (0, 1)");
  if (!(clip > 0.0)) throw ConfigError("clip must be positive");
  try {
    hyperparams().validate();
  } catch (const InvalidHyperparameterError& e) {
    throw ConfigError(e.what());
  }
}

model::ModelConfig TrainingConfig::model_config() const {
  model::ModelConfig m;
  m.vocab_size = vocab_size;
  m.h_dim = h_dim;
  m.layers = layers;
  m.level = level;
  m.max_decode_len = max_decode_len;
  return m;
}

TrainingConfig parse_config(std::istream& in, std::string_view source) {
  TrainingConfig c;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::string_view text = line;
    if (auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    const std::string where = std::string(source) + ":" + std::to_string(n) + ": '" + line + "': ";
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key=value");
    const std::string_view key = trim(text.substr(0, eq));
    const std::string_view value = trim(text.substr(eq + 1));
    try {
      set_config_value(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  c.validate();
  return c;
}

TrainingConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_config(in, path.string());
}

void write_config(const TrainingConfig& c, std::ostream& out) {
  out << std::setprecision(17);
  out << "h_dim = " << c.h_dim << '\n'
      << "layers = " << c.layers << '\n'
      << "vocab_size = " << c.vocab_size << '\n'
      << "alpha = " << c.alpha << '\n'
      << "beta = " << c.beta << '\n'
      << "tau = " << c.tau << '\n'
      << "top_k = " << c.top_k << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "lr = " << c.lr << '\n'
      << "lr_decay = " << c.lr_decay << '\n'
      << "clip = " << c.clip << '\n'
      << "max_epochs = " << c.max_epochs << '\n'
      << "max_steps = " << c.max_steps << '\n'
      << "seed = " << c.seed << '\n'
      << "strategy = " << strategy_name(c.strategy) << '\n'
      << "level = " << level_name(c.level) << '\n'
      << "disc_bootstrap = " << (c.disc_bootstrap ? "true" : "false") << '\n'
      << "mode = " << mode_name(c.mode) << '\n'
      << "word_coefficient = "
      << (c.word_coefficient == objectives::WordCoefficient::alpha ? "alpha" : "one_minus_beta") << '\n'
      << "max_turn_len = " << c.max_turn_len << '\n'
      << "max_turns = " << c.max_turns << '\n'
      << "max_decode_len = " << c.max_decode_len << '\n'
      << "checkpoint_every = " << c.checkpoint_every << '\n'
      << "validate_every = " << c.validate_every << '\n'
      << "log_every = " << c.log_every << '\n';
}

void write_config(const TrainingConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config " + path.string());
  write_config(config, out);
}

}  // namespace aboots::train
