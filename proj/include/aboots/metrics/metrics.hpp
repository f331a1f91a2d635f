#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace aboots::metrics {

using Tokens = std::vector<std::string>;

// Hypothesis/reference pair, both without the end-of-sequence marker.
struct EvalPair {
  Tokens hypothesis;
  Tokens reference;
};

// Corpus-level BLEU with uniform weights on clipped 1- and 2-gram precision
// and the usual brevity penalty. No smoothing: 0 when either precision is 0.
double bleu2(std::span<const EvalPair> pairs);

// Mean over pairs of bigram F1; a pair with no bigram on either side scores 0.
double rouge2(std::span<const EvalPair> pairs);

// Distinct n-grams over total n-grams across all hypotheses (0 when there are
// no n-grams).
double distinct_n(std::span<const Tokens> hypotheses, std::size_t n);
double distinct_n(std::span<const EvalPair> pairs, std::size_t n);

// Mean of len(hypothesis) / len(reference).
double nasl(std::span<const EvalPair> pairs);

struct Report {
  double bleu2 = 0.0;
  double rouge2 = 0.0;
  double dist1 = 0.0;
  double dist2 = 0.0;
  double nasl = 0.0;
};

Report evaluate(std::span<const EvalPair> pairs);

// CSV `metric,value` with rows bleu2, rouge2, dist1, dist2, nasl.
void write_report_csv(const Report& report, std::ostream& out);
void write_report_csv(const Report& report, const std::filesystem::path& path);
void print_report_table(const Report& report, std::ostream& out);

}  // namespace aboots::metrics
