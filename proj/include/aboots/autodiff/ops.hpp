#pragma once

#include <span>
#include <vector>

#include "aboots/autodiff/graph.hpp"
#include "aboots/autodiff/tensor.hpp"

namespace aboots::ad {

// ---------------------------------------------------------------------------
// Plain tensor math (no graph)
// ---------------------------------------------------------------------------

// softmax(logits / tau). Throws InvalidHyperparameterError when tau <= 0.
Tensor softmax_with_temperature(const Tensor& logits, double tau);

// Element-wise root-mean-square over time: out_d = sqrt(mean_j v_jd^2).
Tensor l2_pooling(std::span<const Tensor> sequence);

// Weights of one GRU layer. Row blocks of W (3h x in), U (3h x h) and b (3h)
// are ordered update gate, reset gate, candidate.
struct GruWeights {
  Tensor W;
  Tensor U;
  Tensor b;
};

// h' = z*h + (1-z)*tanh(W_c x + U_c (r*h) + b_c).
Tensor gru_cell_forward(const Tensor& x, const Tensor& h_prev, const GruWeights& w);

double sigmoid(double x);

// ---------------------------------------------------------------------------
// Differentiable ops
// ---------------------------------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var one_minus(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var log(Var a);
Var square(Var a);

Var matvec(Var W, Var x);
// M^T a for M (n x d), a (n): the a-weighted sum of the rows of M.
Var mat_t_vec(Var M, Var a);
Var affine(Var W, Var x, Var b);

Var concat(std::span<const Var> parts);
inline Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }
// Sum of equally shaped tensors.
Var add_n(std::span<const Var> terms);
Var weighted_sum(Var weights, std::span<const Var> vectors);

Var dot(Var a, Var b);
Var sum(Var a);
Var pick(Var a, std::size_t index);
Var row(Var M, std::size_t index);

Var softmax(Var logits, double tau);
Var log_softmax(Var logits, double tau);

Var l2_pool(std::span<const Var> sequence);

Var gru_cell(Var x, Var h, Var W, Var U, Var b);

// -[t log q + (1 - t) log(1 - q)] with q clamped to [1e-7, 1 - 1e-7].
Var binary_cross_entropy(Var q, double target);

inline constexpr double kProbabilityClamp = 1e-7;

}  // namespace aboots::ad
