#include "aboots/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>

#include "aboots/errors.hpp"

namespace aboots::metrics {

namespace {

using NGram = std::vector<std::string>;

std::map<NGram, std::size_t> ngram_counts(const Tokens& tokens, std::size_t n) {
  std::map<NGram, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++counts[NGram(tokens.begin() + i, tokens.begin() + i + n)];
  return counts;
}

std::size_t ngram_total(const Tokens& tokens, std::size_t n) { return tokens.size() >= n ? tokens.size() - n + 1 : 0; }

void require_pairs(std::span<const EvalPair> pairs, const char* what) {
  if (pairs.empty()) throw EmptyInputError(std::string(what) + ": no evaluation pairs");
}

}  // namespace

double bleu2(std::span<const EvalPair> pairs) {
  require_pairs(pairs, "bleu2");
  std::size_t matches[2] = {0, 0}, totals[2] = {0, 0};
  std::size_t hyp_len = 0, ref_len = 0;
  for (const EvalPair& p : pairs) {
    hyp_len += p.hypothesis.size();
    ref_len += p.reference.size();
    for (std::size_t n = 1; n <= 2; ++n) {
      const auto ref = ngram_counts(p.reference, n);
      for (const auto& [gram, c] : ngram_counts(p.hypothesis, n)) {
        auto it = ref.find(gram);
        if (it != ref.end()) matches[n - 1] += std::min(c, it->second);
      }
      totals[n - 1] += ngram_total(p.hypothesis, n);
    }
  }
  if (matches[0] == 0 || matches[1] == 0) return 0.0;
  const double p1 = static_cast<double>(matches[0]) / static_cast<double>(totals[0]);
  const double p2 = static_cast<double>(matches[1]) / static_cast<double>(totals[1]);
  const double bp = hyp_len > ref_len ? 1.0 : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return bp * std::sqrt(p1 * p2);
}

double rouge2(std::span<const EvalPair> pairs) {
  require_pairs(pairs, "rouge2");
  double total = 0.0;
  for (const EvalPair& p : pairs) {
    const std::size_t nh = ngram_total(p.hypothesis, 2);
    const std::size_t nr = ngram_total(p.reference, 2);
    if (nh == 0 || nr == 0) continue;
    const auto ref = ngram_counts(p.reference, 2);
    std::size_t overlap = 0;
    for (const auto& [gram, c] : ngram_counts(p.hypothesis, 2)) {
      auto it = ref.find(gram);
      if (it != ref.end()) overlap += std::min(c, it->second);
    }
    if (overlap == 0) continue;
    const double precision = static_cast<double>(overlap) / static_cast<double>(nh);
    const double recall = static_cast<double>(overlap) / static_cast<double>(nr);
    total += 2.0 * precision * recall / (precision + recall);
  }
  return total / static_cast<double>(pairs.size());
}

double distinct_n(std::span<const Tokens> hypotheses, std::size_t n) {
  if (n == 0) throw ContractError("distinct_n: n must be positive");
  std::set<NGram> distinct;
  std::size_t total = 0;
  for (const Tokens& h : hypotheses) {
    for (const auto& [gram, c] : ngram_counts(h, n)) distinct.insert(gram);
    total += ngram_total(h, n);
  }
  return total == 0 ? 0.0 : static_cast<double>(distinct.size()) / static_cast<double>(total);
}

double distinct_n(std::span<const EvalPair> pairs, std::size_t n) {
  std::vector<Tokens> hyps;
  hyps.reserve(pairs.size());
  for (const EvalPair& p : pairs) hyps.push_back(p.hypothesis);
  return distinct_n(hyps, n);
}

double nasl(std::span<const EvalPair> pairs) {
  require_pairs(pairs, "nasl");
  double total = 0.0;
  for (const EvalPair& p : pairs) {
    if (p.reference.empty()) throw ContractError("nasl: empty reference");
    total += static_cast<double>(p.hypothesis.size()) / static_cast<double>(p.reference.size());
  }
  return total / static_cast<double>(pairs.size());
}

Report evaluate(std::span<const EvalPair> pairs) {
  return Report{bleu2(pairs), rouge2(pairs), distinct_n(pairs, 1), distinct_n(pairs, 2), nasl(pairs)};
}

void write_report_csv(const Report& r, std::ostream& out) {
  out << "metric,value\n" << std::setprecision(17);
  out << "bleu2," << r.bleu2 << "\nrouge2," << r.rouge2 << "\ndist1," << r.dist1 << "\ndist2," << r.dist2
      << "\nnasl," << r.nasl << '\n';
}

void write_report_csv(const Report& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_report_csv(report, out);
}

void print_report_table(const Report& r, std::ostream& out) {
  out << std::fixed << std::setprecision(4);
  out << "  BLEU-2   " << std::setw(8) << r.bleu2 << '\n'
      << "  ROUGE-2  " << std::setw(8) << r.rouge2 << '\n'
      << "  DIST-1   " << std::setw(8) << r.dist1 << '\n'
      << "  DIST-2   " << std::setw(8) << r.dist2 << '\n'
      << "  NASL     " << std::setw(8) << r.nasl << '\n';
  out.unsetf(std::ios::fixed);
}

}  // namespace aboots::metrics
