#include "aboots/corpus/batching.hpp"

#include <algorithm>
#include <numeric>

namespace aboots::corpus {

namespace {

void put_row(std::vector<TokenId>& matrix, std::vector<std::size_t>& lengths, std::size_t row, std::size_t max_len,
             const Sequence& seq) {
  std::copy(seq.begin(), seq.end(), matrix.begin() + static_cast<std::ptrdiff_t>(row * max_len));
  lengths[row] = seq.size();
}

Sequence get_row(const std::vector<TokenId>& matrix, const std::vector<std::size_t>& lengths, std::size_t row,
                 std::size_t max_len) {
  auto first = matrix.begin() + static_cast<std::ptrdiff_t>(row * max_len);
  return Sequence(first, first + static_cast<std::ptrdiff_t>(lengths[row]));
}

}  // namespace

DialogueExample Batch::example(std::size_t b) const {
  DialogueExample ex;
  for (std::size_t t = 0; t < turn_counts.at(b); ++t)
    ex.context.push_back(get_row(contexts, context_lengths, b * max_turns + t, max_len));
  ex.target = get_row(targets, target_lengths, b, max_len);
  if (distractor_lengths[b] > 0) ex.distractor = get_row(distractors, distractor_lengths, b, max_len);
  return ex;
}

std::vector<DialogueExample> Batch::examples() const {
  std::vector<DialogueExample> out;
  out.reserve(size);
  for (std::size_t b = 0; b < size; ++b) out.push_back(example(b));
  return out;
}

std::vector<Batch> make_batches(std::span<const DialogueExample> examples, std::size_t batch_size,
                                const SequenceLimits& limits, Rng& rng) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t context_turns = limits.max_turns - 1;
  const std::size_t L = limits.max_turn_len;
  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t B = std::min(batch_size, order.size() - start);
    Batch batch;
    batch.size = B;
    batch.max_turns = context_turns;
    batch.max_len = L;
    batch.turn_counts.assign(B, 0);
    batch.contexts.assign(B * context_turns * L, kPad);
    batch.context_lengths.assign(B * context_turns, 0);
    batch.targets.assign(B * L, kPad);
    batch.target_lengths.assign(B, 0);
    batch.distractors.assign(B * L, kPad);
    batch.distractor_lengths.assign(B, 0);
    for (std::size_t b = 0; b < B; ++b) {
      const DialogueExample& ex = examples[order[start + b]];
      const std::size_t keep = std::min(ex.context.size(), context_turns);
      const std::size_t skip = ex.context.size() - keep;
      for (std::size_t t = 0; t < keep; ++t)
        put_row(batch.contexts, batch.context_lengths, b * context_turns + t, L, terminate(ex.context[skip + t], L));
      batch.turn_counts[b] = keep;
      put_row(batch.targets, batch.target_lengths, b, L, terminate(ex.target, L));
      if (!ex.distractor.empty()) put_row(batch.distractors, batch.distractor_lengths, b, L, terminate(ex.distractor, L));
    }
    out.push_back(std::move(batch));
  }
  return out;
}

}  // namespace aboots::corpus
