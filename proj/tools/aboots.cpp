#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "aboots/corpus/entropy.hpp"
#include "aboots/errors.hpp"
#include "aboots/metrics/metrics.hpp"
#include "aboots/train/config.hpp"
#include "aboots/train/evaluation.hpp"
#include "aboots/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace aboots;

namespace {

constexpr int kExitUser = 1;
constexpr int kExitInternal = 2;

struct DecodeFlags {
  std::string mode = "greedy";
  std::size_t k = policy::kDefaultTopK;
  std::uint64_t seed = 1;
};

void add_decode_flags(CLI::App* cmd, DecodeFlags& f) {
  cmd->add_option("--mode", f.mode, "Decoding: greedy or topk")->check(CLI::IsMember({"greedy", "topk"}));
  cmd->add_option("--k", f.k, "Candidates kept by top-k sampling");
  cmd->add_option("--seed", f.seed, "Seed for sampled decoding");
}

train::DecodeSettings decode_settings(const DecodeFlags& f, const train::TrainingConfig& config) {
  train::DecodeSettings s;
  s.sample = f.mode == "topk";
  s.policy = {config.strategy, f.k};
  s.tau = config.tau;
  return s;
}

// Every conversation found under `path`: a corpus file, or a directory with
// corpus.txt or train/valid/test.txt.
std::vector<corpus::Conversation> read_conversations(const fs::path& path) {
  if (fs::is_regular_file(path)) return corpus::read_corpus(path);
  if (!fs::is_directory(path)) throw IoError("cannot read " + path.string());
  std::vector<corpus::Conversation> out;
  for (const char* name : {"corpus.txt", "train.txt", "valid.txt", "test.txt"}) {
    if (!fs::exists(path / name)) continue;
    auto part = corpus::read_corpus(path / name);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  if (out.empty()) throw EmptyInputError("no corpus files in " + path.string());
  return out;
}

int run_train(const fs::path& config_path, const fs::path& data, const fs::path& out,
              std::optional<std::uint64_t> seed, const std::optional<fs::path>& resume,
              std::optional<std::size_t> max_steps) {
  if (resume) {
    const auto summary = train::resume_training(*resume, data, out, max_steps);
    std::cout << "final checkpoint: " << summary.final_checkpoint.string() << '\n';
    return 0;
  }
  train::TrainingConfig config = train::read_config(config_path);
  if (seed) config.seed = *seed;
  if (max_steps) config.max_steps = *max_steps;
  const auto summary = train::run_training(config, data, out);
  if (!summary.rows.empty()) {
    const auto& last = summary.rows.back();
    std::cout << "step " << last.step << " gen_loss " << last.generator_loss << " disc_loss "
              << last.discriminator_loss << '\n';
  }
  std::cout << "final checkpoint: " << summary.final_checkpoint.string() << '\n';
  return 0;
}

int run_eval(const fs::path& checkpoint_dir, const fs::path& data, const std::string& split,
             const DecodeFlags& flags, std::optional<fs::path> out) {
  const train::Checkpoint cp = train::load_checkpoint(checkpoint_dir);
  const train::DataSplits splits = train::load_data(data, cp.config.seed);
  const auto& conversations = train::select_split(splits, split);
  const auto examples = corpus::make_examples(conversations, cp.vocab, cp.config.limits());
  if (examples.empty()) throw EmptyInputError("split '" + split + "' is empty");
  const model::HredModel model(model::ModelConfig{cp.vocab.size(), cp.config.h_dim, cp.config.layers,
                                                  cp.config.level, cp.config.max_decode_len});
  const auto settings = decode_settings(flags, cp.config);
  const auto pairs = train::decode_pairs(model, cp.params, cp.vocab, examples, settings, flags.seed);
  const metrics::Report report = metrics::evaluate(pairs);
  metrics::print_report_table(report, std::cout);
  const fs::path path = out ? *out : fs::path("metrics_" + split + ".csv");
  metrics::write_report_csv(report, path);
  return 0;
}

int run_generate(const fs::path& checkpoint_dir, const std::string& context, const DecodeFlags& flags) {
  const train::Checkpoint cp = train::load_checkpoint(checkpoint_dir);
  if (flags.mode == "topk" && (flags.k == 0 || flags.k > cp.vocab.size()))
    throw ConfigError("--k must lie in [1, " + std::to_string(cp.vocab.size()) + "]");
  std::vector<corpus::Sequence> turns;
  std::size_t start = 0;
  while (start <= context.size()) {
    const std::size_t tab = context.find('\t', start);
    const std::string turn = context.substr(start, tab == std::string::npos ? std::string::npos : tab - start);
    const corpus::Tokens tokens = corpus::tokenize(turn);
    if (!tokens.empty()) turns.push_back(corpus::terminate(cp.vocab.encode(tokens), cp.config.max_turn_len));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  if (turns.empty()) throw EmptyInputError("--context has no tokens");
  const std::size_t keep = cp.config.max_turns - 1;
  if (turns.size() > keep) turns.erase(turns.begin(), turns.end() - static_cast<std::ptrdiff_t>(keep));
  const model::HredModel model(model::ModelConfig{cp.vocab.size(), cp.config.h_dim, cp.config.layers,
                                                  cp.config.level, cp.config.max_decode_len});
  ad::Rng rng(flags.seed);
  const corpus::Sequence ids = train::respond(model, cp.params, turns, decode_settings(flags, cp.config), &rng);
  const corpus::Tokens words = cp.vocab.decode(ids);
  for (std::size_t i = 0; i < words.size(); ++i) std::cout << (i ? " " : "") << words[i];
  std::cout << '\n';
  return 0;
}

int run_entropy(const fs::path& data, const fs::path& out, bool all_utterances) {
  const auto conversations = read_conversations(data);
  const auto sequences = all_utterances ? corpus::all_utterances(conversations) : corpus::responses(conversations);
  const auto rows = corpus::positional_entropy(sequences);
  corpus::write_entropy_csv(rows, out);
  std::cout << rows.size() << " positions written to " << out.string() << '\n';
  return 0;
}

int run_search(const fs::path& checkpoint_dir, const fs::path& data, const std::string& split, std::uint64_t seed,
               std::optional<fs::path> out) {
  const train::Checkpoint cp = train::load_checkpoint(checkpoint_dir);
  const train::DataSplits splits = train::load_data(data, cp.config.seed);
  const auto examples = corpus::make_examples(train::select_split(splits, split), cp.vocab, cp.config.limits());
  const model::HredModel model(model::ModelConfig{cp.vocab.size(), cp.config.h_dim, cp.config.layers,
                                                  cp.config.level, cp.config.max_decode_len});
  const auto result = train::search_top_k(model, cp.params, cp.vocab, examples, cp.config.strategy, cp.config.tau, seed);
  std::ofstream csv;
  if (out) {
    csv.open(*out);
    if (!csv) throw IoError("cannot write " + out->string());
    csv << "k,bleu2\n" << std::setprecision(17);
  }
  for (const auto& [k, bleu] : result.curve) {
    std::cout << "k=" << k << " bleu2=" << bleu << '\n';
    if (out) csv << k << ',' << bleu << '\n';
  }
  std::cout << "best k=" << result.best_k << " bleu2=" << result.best_bleu << '\n';
  return 0;
}

int run_build_vocab(const fs::path& data, const fs::path& out, std::size_t size) {
  const auto conversations = read_conversations(data);
  const auto vocab = corpus::Vocabulary::build(corpus::all_utterances(conversations), size);
  vocab.save(out);
  std::cout << vocab.size() << " tokens written to " << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial bootstrapping for dialogue models"};
  app.require_subcommand(1);

  fs::path config_path, data, out, checkpoint;
  std::optional<fs::path> out_opt, resume;
  std::optional<std::uint64_t> seed_opt;
  std::optional<std::size_t> max_steps;
  std::string split = "test", context;
  DecodeFlags decode;
  bool all_utterances = false;
  std::size_t vocab_size = corpus::kDefaultVocabularySize;
  std::uint64_t seed = 1;

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", config_path, "Config file (key = value lines)")->check(CLI::ExistingFile);
  train_cmd->add_option("--data", data, "Corpus directory")->required();
  train_cmd->add_option("--out", out, "Output directory")->required();
  train_cmd->add_option("--seed", seed_opt, "Overrides the config seed");
  train_cmd->add_option("--resume", resume, "Checkpoint directory to continue from")->check(CLI::ExistingDirectory);
  train_cmd->add_option("--max-steps", max_steps, "Overrides the step budget");

  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a data split");
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
  eval_cmd->add_option("--data", data, "Corpus directory")->required();
  eval_cmd->add_option("--split", split, "train, valid or test");
  eval_cmd->add_option("--out", out_opt, "Metrics CSV (default metrics_<split>.csv)");
  add_decode_flags(eval_cmd, decode);

  auto* gen_cmd = app.add_subcommand("generate", "Respond to one context");
  gen_cmd->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
  gen_cmd->add_option("--context", context, "Context turns separated by TAB")->required();
  add_decode_flags(gen_cmd, decode);

  auto* ent_cmd = app.add_subcommand("entropy", "Positional entropy of a corpus");
  ent_cmd->add_option("--data", data, "Corpus file or directory")->required();
  ent_cmd->add_option("--out", out, "Output CSV")->required();
  ent_cmd->add_flag("--all-utterances", all_utterances, "Use every turn, not only responses");
  ent_cmd->add_option("--seed", seed, "Unused; accepted for uniformity");

  auto* search_cmd = app.add_subcommand("search-topk", "BLEU-2 of top-k sampling for k in 1..20");
  search_cmd->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
  search_cmd->add_option("--data", data, "Corpus directory")->required();
  search_cmd->add_option("--split", split, "Split to decode (default valid)");
  search_cmd->add_option("--seed", seed, "Sampling seed");
  search_cmd->add_option("--out", out_opt, "Curve CSV");

  auto* vocab_cmd = app.add_subcommand("build-vocab", "Write the vocabulary of a corpus");
  vocab_cmd->add_option("--data", data, "Corpus file or directory")->required();
  vocab_cmd->add_option("--out", out, "Vocabulary file")->required();
  vocab_cmd->add_option("--size", vocab_size, "Capacity including reserved tokens");
  vocab_cmd->add_option("--seed", seed, "Unused; accepted for uniformity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) {
      std::cerr << app.help();
      return kExitUser;
    }
    return 0;
  }

  try {
    if (*train_cmd) {
      if (!resume && config_path.empty()) throw ConfigError("train needs --config or --resume");
      return run_train(config_path, data, out, seed_opt, resume, max_steps);
    }
    if (*eval_cmd) return run_eval(checkpoint, data, split, decode, out_opt);
    if (*gen_cmd) return run_generate(checkpoint, context, decode);
    if (*ent_cmd) return run_entropy(data, out, all_utterances);
    if (*search_cmd) return run_search(checkpoint, data, search_cmd->count("--split") ? split : "valid", seed, out_opt);
    if (*vocab_cmd) return run_build_vocab(data, out, vocab_size);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_user_error() ? kExitUser : kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
