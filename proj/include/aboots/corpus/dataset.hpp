#pragma once

#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "aboots/corpus/vocabulary.hpp"
#include "aboots/errors.hpp"

namespace aboots::corpus {

using Rng = std::mt19937_64;

// One conversation, lowercased and whitespace-tokenized. The last turn is the
// response; every earlier turn is context.
struct Conversation {
  std::vector<Tokens> turns;

  std::span<const Tokens> context() const { return std::span<const Tokens>(turns).first(turns.size() - 1); }
  const Tokens& response() const { return turns.back(); }
};

struct SequenceLimits {
  std::size_t max_turn_len = 30;  // tokens per turn, including </s>
  std::size_t max_turns = 3;      // context turns + response
};

struct DialogueExample {
  std::vector<Sequence> context;
  Sequence target;
  Sequence distractor;

  friend bool operator==(const DialogueExample&, const DialogueExample&) = default;
};

Tokens tokenize(std::string_view text);

// Corpus text: one conversation per line, turns separated by TAB. Blank lines
// are skipped; a line with fewer than two non-empty turns is an error.
std::vector<Conversation> parse_corpus(std::istream& in, std::string_view source = "<stream>");
std::vector<Conversation> read_corpus(const std::filesystem::path& path);

std::vector<Tokens> all_utterances(std::span<const Conversation> conversations);
std::vector<Tokens> responses(std::span<const Conversation> conversations);

// Truncates to max_len-1 tokens and appends </s>.
Sequence terminate(Sequence ids, std::size_t max_len);

// Encodes conversations; the context keeps the last max_turns-1 turns.
// Distractors are left empty until `assign_distractors`.
std::vector<DialogueExample> make_examples(std::span<const Conversation> conversations, const Vocabulary& vocab,
                                           const SequenceLimits& limits = {});

// 90% / 5% / 5% split after a seeded shuffle: sizes floor(0.9n), floor(0.05n)
// and the remainder. Requires at least 20 items.
template <typename T>
struct Split {
  std::vector<T> train, valid, test;
};

inline constexpr std::size_t kMinimumSplitSize = 20;

template <typename T>
Split<T> split_dataset(std::span<const T> items, std::uint64_t seed) {
  const std::size_t n = items.size();
  if (n < kMinimumSplitSize)
    throw ConfigError("split_dataset needs at least " + std::to_string(kMinimumSplitSize) + " examples, got " +
                      std::to_string(n));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_train = n * 90 / 100;
  const std::size_t n_valid = n * 5 / 100;
  Split<T> out;
  for (std::size_t k = 0; k < n; ++k) {
    auto& bucket = k < n_train ? out.train : (k < n_train + n_valid ? out.valid : out.test);
    bucket.push_back(items[order[k]]);
  }
  return out;
}

// Uniform draw over training targets that differ from `exclude`.
const Sequence& sample_distractor(std::span<const DialogueExample> dataset, Rng& rng, const Sequence& exclude);

// Gives every example a fresh distractor drawn from `pool`.
void assign_distractors(std::span<DialogueExample> examples, std::span<const DialogueExample> pool, Rng& rng);

}  // namespace aboots::corpus
