#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "aboots/autodiff/graph.hpp"
#include "aboots/autodiff/ops.hpp"
#include "aboots/autodiff/optim.hpp"

namespace testing {

using aboots::ad::Graph;
using aboots::ad::Tensor;
using aboots::ad::Var;

inline Tensor random_tensor(const aboots::ad::Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(shape);
  for (double& v : t.values()) v = u(rng);
  return t;
}

// |a - n| / max(|a|, |n|); pairs where both magnitudes are below `floor` are
// compared absolutely against `floor`.
inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < floor) return std::abs(analytic - numeric) / floor;
  return std::abs(analytic - numeric) / scale;
}

// Straight loops over the GRU equations, sharing nothing with the library.
// Row blocks: update gate, reset gate, candidate.
inline std::vector<double> gru_oracle(const std::vector<double>& x, const std::vector<double>& h, const Tensor& W,
                                      const Tensor& U, const Tensor& b) {
  const std::size_t n = h.size(), in = x.size();
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  auto gate_pre = [&](std::size_t block, std::size_t i, const std::vector<double>& hh) {
    double s = b[block * n + i];
    for (std::size_t j = 0; j < in; ++j) s += W[(block * n + i) * in + j] * x[j];
    for (std::size_t j = 0; j < n; ++j) s += U[(block * n + i) * n + j] * hh[j];
    return s;
  };
  std::vector<double> z(n), r(n), rh(n), out(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = sig(gate_pre(0, i, h));
    r[i] = sig(gate_pre(1, i, h));
  }
  for (std::size_t i = 0; i < n; ++i) rh[i] = r[i] * h[i];
  for (std::size_t i = 0; i < n; ++i) out[i] = z[i] * h[i] + (1.0 - z[i]) * std::tanh(gate_pre(2, i, rh));
  return out;
}

inline std::vector<double> to_vector(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

using ScalarFn = std::function<Var(Graph&, const std::vector<Var>&)>;

// Largest relative error between reverse-mode gradients of `fn` with respect
// to every input entry and central differences with step `eps`.
inline double gradient_check(const ScalarFn& fn, std::vector<Tensor> inputs, double eps = 1e-5) {
  auto evaluate = [&](const std::vector<Tensor>& xs) {
    Graph g;
    std::vector<Var> vars;
    for (const Tensor& x : xs) vars.push_back(g.input(x));
    return fn(g, vars).item();
  };
  Graph g;
  std::vector<Var> vars;
  for (const Tensor& x : inputs) vars.push_back(g.input(x));
  const Var loss = fn(g, vars);
  g.backward(loss);
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor analytic = g.grad(vars[k]);
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double saved = inputs[k][i];
      inputs[k][i] = saved + eps;
      const double up = evaluate(inputs);
      inputs[k][i] = saved - eps;
      const double down = evaluate(inputs);
      inputs[k][i] = saved;
      worst = std::max(worst, relative_error(analytic[i], (up - down) / (2.0 * eps)));
    }
  }
  return worst;
}

// Same check against named parameters of a ParameterSet.
inline double parameter_gradient_check(aboots::ad::ParameterSet& params, const std::vector<std::string>& names,
                                       const std::function<Var(Graph&)>& fn, std::size_t max_entries = 0,
                                       double eps = 1e-5, double floor = 1e-8) {
  Graph g(params);
  g.backward(fn(g));
  const auto grads = g.parameter_gradients();
  double worst = 0.0;
  for (const std::string& name : names) {
    Tensor& value = params.value(name);
    const std::size_t n = max_entries ? std::min(max_entries, value.size()) : value.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double saved = value[i];
      value[i] = saved + eps;
      double up;
      {
        Graph gu(params);
        up = fn(gu).item();
      }
      value[i] = saved - eps;
      double down;
      {
        Graph gd(params);
        down = fn(gd).item();
      }
      value[i] = saved;
      worst = std::max(worst, relative_error(grads.at(name)[i], (up - down) / (2.0 * eps), floor));
    }
  }
  return worst;
}

}  // namespace testing
