#pragma once

#include <span>
#include <vector>

#include "aboots/corpus/dataset.hpp"

namespace aboots::corpus {

inline constexpr std::size_t kDefaultBatchSize = 64;

// Padded id matrices for one batch. Context turns of example b occupy rows
// b*max_turns .. b*max_turns+turn_counts[b]-1 of `contexts`; unused rows have
// length 0. Every row is <pad>-filled after its </s>.
struct Batch {
  std::size_t size = 0;
  std::size_t max_turns = 0;
  std::size_t max_len = 0;

  std::vector<std::size_t> turn_counts;
  std::vector<TokenId> contexts;
  std::vector<std::size_t> context_lengths;
  std::vector<TokenId> targets;
  std::vector<std::size_t> target_lengths;
  std::vector<TokenId> distractors;
  std::vector<std::size_t> distractor_lengths;

  DialogueExample example(std::size_t b) const;
  std::vector<DialogueExample> examples() const;
};

// One epoch: a seeded shuffle cut into batches of B (the last may be short).
// Sequences are re-terminated to the limits before padding.
std::vector<Batch> make_batches(std::span<const DialogueExample> examples, std::size_t batch_size,
                                const SequenceLimits& limits, Rng& rng);

}  // namespace aboots::corpus
