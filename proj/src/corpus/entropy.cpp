#include "aboots/corpus/entropy.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>

#include "aboots/errors.hpp"

namespace aboots::corpus {

std::vector<PositionEntropy> positional_entropy(std::span<const Tokens> sequences) {
  std::size_t longest = 0;
  for (const Tokens& s : sequences) longest = std::max(longest, s.size());
  if (longest == 0) throw EmptyInputError("positional_entropy: corpus has no tokens");

  std::vector<std::map<std::string, std::size_t>> counts(longest);
  std::vector<std::size_t> totals(longest, 0);
  for (const Tokens& s : sequences)
    for (std::size_t p = 0; p < s.size(); ++p) {
      ++counts[p][s[p]];
      ++totals[p];
    }

  std::vector<PositionEntropy> out;
  out.reserve(longest);
  for (std::size_t p = 0; p < longest; ++p) {
    double h = 0.0;
    const double n = static_cast<double>(totals[p]);
    for (const auto& [tok, c] : counts[p]) {
      const double prob = static_cast<double>(c) / n;
      h -= prob * std::log2(prob);
    }
    out.push_back({p + 1, h == 0.0 ? 0.0 : h, totals[p]});
  }
  return out;
}

void write_entropy_csv(std::span<const PositionEntropy> rows, std::ostream& out) {
  out << "position,entropy_bits,support\n";
  out << std::setprecision(17);
  for (const PositionEntropy& r : rows) out << r.position << ',' << r.entropy_bits << ',' << r.support << '\n';
}

void write_entropy_csv(std::span<const PositionEntropy> rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_entropy_csv(rows, out);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace aboots::corpus
