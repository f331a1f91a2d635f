#pragma once

// Reference implementations written independently of the library code they
// check: metrics over joined strings, entropy by direct counting, and an
// enumerable two-step policy for the score-function estimator.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "aboots/autodiff/graph.hpp"
#include "aboots/autodiff/ops.hpp"
#include "aboots/metrics/metrics.hpp"
#include "aboots/policy/policy.hpp"

namespace testing {

// ---- metrics

inline std::vector<std::string> ngrams(const std::vector<std::string>& t, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    std::string g;
    for (std::size_t k = 0; k < n; ++k) g += t[i + k] + "\x1f";
    out.push_back(g);
  }
  return out;
}

// Removes matched grams from a copy of the reference, one at a time.
inline double clipped_matches(const std::vector<std::string>& hyp, std::vector<std::string> ref) {
  double m = 0;
  for (const auto& g : hyp) {
    auto it = std::find(ref.begin(), ref.end(), g);
    if (it != ref.end()) {
      m += 1;
      ref.erase(it);
    }
  }
  return m;
}

inline double naive_bleu2(const std::vector<aboots::metrics::EvalPair>& pairs) {
  double match[3] = {0, 0, 0}, total[3] = {0, 0, 0};
  double c = 0, r = 0;
  for (const auto& p : pairs) {
    c += static_cast<double>(p.hypothesis.size());
    r += static_cast<double>(p.reference.size());
    for (std::size_t n = 1; n <= 2; ++n) {
      const auto h = ngrams(p.hypothesis, n);
      total[n] += static_cast<double>(h.size());
      match[n] += clipped_matches(h, ngrams(p.reference, n));
    }
  }
  if (total[1] == 0 || total[2] == 0 || match[1] == 0 || match[2] == 0) return 0.0;
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::sqrt((match[1] / total[1]) * (match[2] / total[2]));
}

inline double naive_rouge2(const std::vector<aboots::metrics::EvalPair>& pairs) {
  double sum = 0;
  for (const auto& p : pairs) {
    const auto h = ngrams(p.hypothesis, 2);
    const auto ref = ngrams(p.reference, 2);
    if (h.empty() || ref.empty()) continue;
    const double overlap = clipped_matches(h, ref);
    if (overlap == 0) continue;
    const double prec = overlap / static_cast<double>(h.size());
    const double rec = overlap / static_cast<double>(ref.size());
    sum += 2 * prec * rec / (prec + rec);
  }
  return sum / static_cast<double>(pairs.size());
}

inline double naive_distinct(const std::vector<aboots::metrics::EvalPair>& pairs, std::size_t n) {
  std::set<std::string> uniq;
  double total = 0;
  for (const auto& p : pairs)
    for (const auto& g : ngrams(p.hypothesis, n)) {
      uniq.insert(g);
      total += 1;
    }
  return total == 0 ? 0.0 : static_cast<double>(uniq.size()) / total;
}

inline double naive_nasl(const std::vector<aboots::metrics::EvalPair>& pairs) {
  double sum = 0;
  for (const auto& p : pairs) sum += static_cast<double>(p.hypothesis.size()) / static_cast<double>(p.reference.size());
  return sum / static_cast<double>(pairs.size());
}

inline std::vector<aboots::metrics::EvalPair> random_pairs(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_pairs(1, 6), len(0, 8), tok(0, 4);
  std::vector<aboots::metrics::EvalPair> pairs(static_cast<std::size_t>(n_pairs(rng)));
  for (auto& p : pairs) {
    p.hypothesis.resize(static_cast<std::size_t>(len(rng)));
    p.reference.resize(static_cast<std::size_t>(1 + len(rng)));
    for (auto& t : p.hypothesis) t = "w" + std::to_string(tok(rng));
    for (auto& t : p.reference) t = "w" + std::to_string(tok(rng));
  }
  return pairs;
}

// ---- positional entropy

inline std::vector<double> entropy_oracle(const std::vector<std::vector<std::string>>& seqs) {
  std::size_t longest = 0;
  for (const auto& s : seqs) longest = std::max(longest, s.size());
  std::vector<double> out;
  for (std::size_t p = 0; p < longest; ++p) {
    std::map<std::string, double> counts;
    double total = 0;
    for (const auto& s : seqs)
      if (s.size() > p) {
        counts[s[p]] += 1;
        total += 1;
      }
    double h = 0;
    for (const auto& [tok, c] : counts) h -= (c / total) * std::log2(c / total);
    out.push_back(h);
  }
  return out;
}

inline std::vector<std::vector<std::string>> random_token_corpus(std::mt19937_64& rng, std::size_t max_seqs = 100) {
  std::uniform_int_distribution<std::size_t> n_seq(1, max_seqs), len(1, 12);
  std::uniform_int_distribution<int> tok(0, 5);
  std::vector<std::vector<std::string>> seqs(n_seq(rng));
  for (auto& s : seqs) {
    s.resize(len(rng));
    for (auto& t : s) t = std::string(1, static_cast<char>('a' + tok(rng)));
  }
  return seqs;
}

// ---- enumerable policy
//
// Vocabulary {0, 1, 2, 3} with 3 ending the sequence. Step one draws from
// softmax(a); unless it ended, step two draws from softmax(B[y1]). Q is a
// fixed table over the 13 possible sequences. Parameters are packed as
// theta = [a (4), B (16)].
struct PolicyToy {
  static constexpr std::size_t kV = 4;
  static constexpr std::size_t kEnd = 3;
  std::vector<double> theta;
  double q_table[kV][kV + 1];  // [y1][y2], column kV for length one

  explicit PolicyToy(std::uint64_t seed) : theta(kV + kV * kV) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0), q(0.0, 1.0);
    for (double& t : theta) t = u(rng);
    for (auto& row : q_table)
      for (double& v : row) v = q(rng);
  }

  static std::vector<double> softmax(const double* logits) {
    double mx = logits[0];
    for (std::size_t i = 1; i < kV; ++i) mx = std::max(mx, logits[i]);
    std::vector<double> p(kV);
    double z = 0;
    for (std::size_t i = 0; i < kV; ++i) z += p[i] = std::exp(logits[i] - mx);
    for (double& v : p) v /= z;
    return p;
  }

  double q(std::size_t y1, std::optional<std::size_t> y2) const { return q_table[y1][y2 ? *y2 : kV]; }

  // E[Q] by enumeration.
  double expected_q(const std::vector<double>& th) const {
    const auto p1 = softmax(th.data());
    double j = 0;
    for (std::size_t y1 = 0; y1 < kV; ++y1) {
      if (y1 == kEnd) {
        j += p1[y1] * q(y1, std::nullopt);
        continue;
      }
      const auto p2 = softmax(th.data() + kV + y1 * kV);
      for (std::size_t y2 = 0; y2 < kV; ++y2) j += p1[y1] * p2[y2] * q(y1, y2);
    }
    return j;
  }

  // Exact gradient of E[Q] by central differences on the enumeration.
  std::vector<double> exact_gradient() const {
    std::vector<double> grad(theta.size());
    std::vector<double> th = theta;
    const double eps = 1e-6;
    for (std::size_t i = 0; i < th.size(); ++i) {
      th[i] = theta[i] + eps;
      const double up = expected_q(th);
      th[i] = theta[i] - eps;
      const double down = expected_q(th);
      th[i] = theta[i];
      grad[i] = (up - down) / (2 * eps);
    }
    return grad;
  }

  // One score-function estimate of grad E[Q] from a top-k categorical sample
  // (k = V), produced by the library's sampler and surrogate.
  std::vector<double> estimate(aboots::ad::Rng& rng, double alpha = 1.0, std::optional<double> fixed_q = {}) const {
    using namespace aboots;
    ad::Graph g;
    const ad::Var a = g.input(ad::Tensor::vector(std::vector<double>(theta.begin(), theta.begin() + kV)));
    const ad::Var B = g.input(ad::Tensor::matrix(kV, kV, std::vector<double>(theta.begin() + kV, theta.end())));
    const ad::Var lp1 = ad::log_softmax(a, 1.0);
    const auto y1 = static_cast<std::size_t>(
        policy::sample_top_k_categorical(ad::softmax(a, 1.0).value(), kV, rng));
    std::vector<ad::Var> lps{ad::pick(lp1, y1)};
    std::optional<std::size_t> y2;
    if (y1 != kEnd) {
      const ad::Var logits = ad::row(B, y1);
      y2 = static_cast<std::size_t>(policy::sample_top_k_categorical(ad::softmax(logits, 1.0).value(), kV, rng));
      lps.push_back(ad::pick(ad::log_softmax(logits, 1.0), *y2));
    }
    const std::vector<double> w{fixed_q ? *fixed_q : q(y1, y2)};
    g.backward(policy::reinforce_loss(g, lps, w, alpha));
    std::vector<double> out;
    const ad::Tensor ga = g.grad(a), gB = g.grad(B);
    for (double v : ga.values()) out.push_back(-v);
    for (double v : gB.values()) out.push_back(-v);
    return out;
  }
};

struct EstimatorStats {
  std::vector<double> mean, standard_error;
};

inline EstimatorStats run_estimator(const PolicyToy& toy, std::size_t n, std::uint64_t seed,
                                    std::optional<double> fixed_q = {}) {
  aboots::ad::Rng rng(seed);
  const std::size_t d = toy.theta.size();
  std::vector<double> sum(d, 0.0), sum_sq(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto e = toy.estimate(rng, 1.0, fixed_q);
    for (std::size_t k = 0; k < d; ++k) {
      sum[k] += e[k];
      sum_sq[k] += e[k] * e[k];
    }
  }
  EstimatorStats s;
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k < d; ++k) {
    const double mean = sum[k] / nn;
    const double var = std::max(0.0, (sum_sq[k] / nn - mean * mean) * nn / (nn - 1));
    s.mean.push_back(mean);
    s.standard_error.push_back(std::sqrt(var / nn));
  }
  return s;
}

}  // namespace testing
