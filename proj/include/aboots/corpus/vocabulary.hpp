#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace aboots::corpus {

using TokenId = std::int32_t;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kSos = 2;
inline constexpr TokenId kEos = 3;
inline constexpr std::size_t kReservedTokens = 4;
inline constexpr std::size_t kDefaultVocabularySize = 50000;

using Tokens = std::vector<std::string>;
using Sequence = std::vector<TokenId>;

// Token <-> id map with reserved ids 0..3 for <pad>, <unk>, <s>, </s>.
class Vocabulary {
 public:
  // Only the reserved ids.
  Vocabulary();

  // Keeps the capacity-4 most frequent tokens; ties go to the token seen
  // first. Throws EmptyInputError when the corpus has no tokens.
  static Vocabulary build(std::span<const Tokens> corpus, std::size_t capacity = kDefaultVocabularySize);
  // Reads a vocabulary file: one token per line, line number = id.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const noexcept { return tokens_.size(); }
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  bool contains(std::string_view token) const;
  // Corpus frequency recorded at build time (0 for loaded vocabularies).
  std::size_t frequency(std::string_view token) const;

  Sequence encode(std::span<const std::string> tokens) const;
  // Drops <pad>/<s> and stops at </s>.
  Tokens decode(std::span<const TokenId> ids) const;

 private:
  void push(std::string token, std::size_t freq);

  std::vector<std::string> tokens_;
  std::vector<std::size_t> freqs_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace aboots::corpus
