#include "aboots/corpus/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "aboots/errors.hpp"

namespace aboots::corpus {

Vocabulary::Vocabulary() {
  for (const char* t : {"<pad>", "<unk>", "<s>", "</s>"}) push(t, 0);
}

void Vocabulary::push(std::string token, std::size_t freq) {
  index_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(std::move(token));
  freqs_.push_back(freq);
}

Vocabulary Vocabulary::build(std::span<const Tokens> corpus, std::size_t capacity) {
  if (capacity < kReservedTokens + 1)
    throw ConfigError("vocabulary capacity must exceed the " + std::to_string(kReservedTokens) + " reserved ids");
  struct Count {
    std::size_t freq = 0;
    std::size_t first = 0;
  };
  std::unordered_map<std::string, Count> counts;
  std::vector<std::string> order;
  std::size_t position = 0;
  for (const Tokens& seq : corpus)
    for (const std::string& t : seq) {
      auto [it, inserted] = counts.try_emplace(t, Count{0, position});
      if (inserted) order.push_back(t);
      ++it->second.freq;
      ++position;
    }
  if (order.empty()) throw EmptyInputError("cannot build a vocabulary from an empty corpus");

  std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    const Count& ca = counts.at(a);
    const Count& cb = counts.at(b);
    if (ca.freq != cb.freq) return ca.freq > cb.freq;
    return ca.first < cb.first;
  });

  Vocabulary v;
  const std::size_t room = capacity - kReservedTokens;
  for (std::size_t i = 0; i < order.size() && i < room; ++i) {
    if (v.index_.count(order[i])) continue;  // literal "<unk>" etc. in the text
    v.push(order[i], counts.at(order[i]).freq);
  }
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary " + path.string());
  Vocabulary v;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (n < kReservedTokens) {
      if (line != v.tokens_[n]) throw IoError(path.string() + ": line " + std::to_string(n + 1) + " should be reserved token " + v.tokens_[n]);
    } else {
      if (line.empty() || v.index_.count(line)) throw IoError(path.string() + ": bad or duplicate token on line " + std::to_string(n + 1));
      v.push(line, 0);
    }
    ++n;
  }
  if (n < kReservedTokens) throw IoError(path.string() + ": truncated vocabulary");
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vocabulary " + path.string());
  for (const std::string& t : tokens_) out << t << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) return tokens_[kUnk];
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const { return index_.count(std::string(token)) > 0; }

std::size_t Vocabulary::frequency(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? 0 : freqs_[static_cast<std::size_t>(it->second)];
}

Sequence Vocabulary::encode(std::span<const std::string> tokens) const {
  Sequence ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(id(t));
  return ids;
}

Tokens Vocabulary::decode(std::span<const TokenId> ids) const {
  Tokens out;
  for (TokenId i : ids) {
    if (i == kEos) break;
    if (i == kPad || i == kSos) continue;
    out.push_back(token(i));
  }
  return out;
}

}  // namespace aboots::corpus
