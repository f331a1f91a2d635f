#pragma once

#include <random>

#include "aboots/autodiff/parameters.hpp"

namespace aboots::ad {

using Rng = std::mt19937_64;

inline constexpr double kDefaultClipThreshold = 5.0;
inline constexpr double kDefaultLearningRate = 0.5;

// Global-norm clipping: scales every gradient by threshold/||g|| when the
// joint L2 norm exceeds the threshold. Returns the pre-clip norm.
double clip_gradients(Gradients& gradients, double threshold = kDefaultClipThreshold);
double global_norm(const Gradients& gradients);

// Uniform on +-sqrt(6 / (fan_in + fan_out)). A matrix (rows x cols) uses
// fan_out = rows, fan_in = cols; a vector of n entries is treated as (1 x n).
Tensor xavier_uniform_init(const Shape& shape, Rng& rng);
double xavier_bound(const Shape& shape);

// p <- p - lr * g for every gradient present. Gradients for names not in
// `params` are a contract error.
void sgd_step(ParameterSet& params, const Gradients& gradients, double lr);

}  // namespace aboots::ad
