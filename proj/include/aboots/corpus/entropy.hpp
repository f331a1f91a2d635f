#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "aboots/corpus/vocabulary.hpp"

namespace aboots::corpus {

struct PositionEntropy {
  std::size_t position = 0;  // 1-based
  double entropy_bits = 0.0;
  std::size_t support = 0;  // sequences long enough to reach this position
};

// Shannon entropy (bits) of the token distribution at each position, over the
// sequences of length >= position. One row per position up to the longest
// sequence.
std::vector<PositionEntropy> positional_entropy(std::span<const Tokens> sequences);

// CSV with header `position,entropy_bits,support`.
void write_entropy_csv(std::span<const PositionEntropy> rows, std::ostream& out);
void write_entropy_csv(std::span<const PositionEntropy> rows, const std::filesystem::path& path);

}  // namespace aboots::corpus
