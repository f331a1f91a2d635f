#include "aboots/corpus/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <sstream>

namespace aboots::corpus {

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::string current;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::vector<Conversation> parse_corpus(std::istream& in, std::string_view source) {
  std::vector<Conversation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (tokenize(line).empty()) continue;
    Conversation conv;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      Tokens turn = tokenize(std::string_view(line).substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (!turn.empty()) conv.turns.push_back(std::move(turn));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (conv.turns.size() < 2)
      throw ConfigError(std::string(source) + ":" + std::to_string(line_no) +
                        ": a conversation needs at least one context turn and a response");
    out.push_back(std::move(conv));
  }
  return out;
}

std::vector<Conversation> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path.string());
  return parse_corpus(in, path.string());
}

std::vector<Tokens> all_utterances(std::span<const Conversation> conversations) {
  std::vector<Tokens> out;
  for (const Conversation& c : conversations) out.insert(out.end(), c.turns.begin(), c.turns.end());
  return out;
}

std::vector<Tokens> responses(std::span<const Conversation> conversations) {
  std::vector<Tokens> out;
  out.reserve(conversations.size());
  for (const Conversation& c : conversations) out.push_back(c.response());
  return out;
}

Sequence terminate(Sequence ids, std::size_t max_len) {
  if (max_len == 0) throw ConfigError("maximum sequence length must be positive");
  while (!ids.empty() && ids.back() == kEos) ids.pop_back();
  if (ids.size() > max_len - 1) ids.resize(max_len - 1);
  ids.push_back(kEos);
  return ids;
}

std::vector<DialogueExample> make_examples(std::span<const Conversation> conversations, const Vocabulary& vocab,
                                           const SequenceLimits& limits) {
  if (limits.max_turns < 2) throw ConfigError("max_turns must be at least 2 (one context turn and a response)");
  std::vector<DialogueExample> out;
  out.reserve(conversations.size());
  for (const Conversation& c : conversations) {
    DialogueExample ex;
    auto ctx = c.context();
    const std::size_t keep = std::min(ctx.size(), limits.max_turns - 1);
    for (std::size_t i = ctx.size() - keep; i < ctx.size(); ++i)
      ex.context.push_back(terminate(vocab.encode(ctx[i]), limits.max_turn_len));
    ex.target = terminate(vocab.encode(c.response()), limits.max_turn_len);
    out.push_back(std::move(ex));
  }
  return out;
}

const Sequence& sample_distractor(std::span<const DialogueExample> dataset, Rng& rng, const Sequence& exclude) {
  const bool any = std::any_of(dataset.begin(), dataset.end(), [&](const DialogueExample& e) { return e.target != exclude; });
  if (!any) throw DegenerateError("cannot sample a distractor: every training target equals the excluded one");
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  while (true) {
    const DialogueExample& e = dataset[pick(rng)];
    if (e.target != exclude) return e.target;
  }
}

void assign_distractors(std::span<DialogueExample> examples, std::span<const DialogueExample> pool, Rng& rng) {
  for (DialogueExample& e : examples) e.distractor = sample_distractor(pool, rng, e.target);
}

}  // namespace aboots::corpus
