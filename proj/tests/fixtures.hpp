#pragma once

// Small models, configs and synthetic dialogue data shared by the trainer
// tests and the acceptance binary.

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "aboots/train/config.hpp"
#include "aboots/train/trainer.hpp"

namespace testing {

inline aboots::train::TrainingConfig small_config(std::size_t vocab_size = 12) {
  aboots::train::TrainingConfig c;
  c.h_dim = 4;
  c.layers = 1;
  c.vocab_size = vocab_size;
  c.top_k = 3;
  c.batch_size = 4;
  c.max_turn_len = 6;
  c.max_turns = 3;
  c.max_decode_len = 5;
  c.max_epochs = 1000;
  c.checkpoint_every = 0;
  c.validate_every = 0;
  c.log_every = 1;
  return c;
}

// Random examples over ids [4, vocab_size), each turn ending in </s>.
inline std::vector<aboots::corpus::DialogueExample> random_examples(std::mt19937_64& rng, std::size_t vocab_size,
                                                                    std::size_t n) {
  using aboots::corpus::Sequence;
  std::uniform_int_distribution<int> tok(4, static_cast<int>(vocab_size) - 1), len(1, 4), turns(1, 2);
  auto sequence = [&] {
    Sequence s(static_cast<std::size_t>(len(rng)));
    for (auto& t : s) t = tok(rng);
    s.push_back(aboots::corpus::kEos);
    return s;
  };
  std::vector<aboots::corpus::DialogueExample> out(n);
  for (auto& ex : out) {
    for (int t = turns(rng); t > 0; --t) ex.context.push_back(sequence());
    ex.target = sequence();
    do ex.distractor = sequence();
    while (ex.distractor == ex.target);
  }
  return out;
}

inline std::filesystem::path repo_data_dir() { return std::filesystem::path(ABOOTS_SOURCE_DIR) / "data" / "toy"; }
inline std::filesystem::path repo_toy_config() {
  return std::filesystem::path(ABOOTS_SOURCE_DIR) / "configs" / "toy.conf";
}

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::path(ABOOTS_BINARY_DIR) / "scratch" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// A corpus directory with one train.txt holding `lines` (valid.txt and
// test.txt copy it).
inline std::filesystem::path write_corpus(const std::filesystem::path& dir, const std::vector<std::string>& lines) {
  std::filesystem::create_directories(dir);
  for (const char* name : {"train.txt", "valid.txt", "test.txt"}) {
    std::ofstream out(dir / name);
    for (const auto& l : lines) out << l << '\n';
  }
  return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing
