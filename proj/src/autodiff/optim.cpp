#include "aboots/autodiff/optim.hpp"

#include <cmath>

#include "aboots/errors.hpp"

namespace aboots::ad {

double global_norm(const Gradients& gradients) {
  double s = 0.0;
  for (const auto& [name, g] : gradients) s += g.squared_norm();
  return std::sqrt(s);
}

double clip_gradients(Gradients& gradients, double threshold) {
  if (!(threshold > 0.0)) throw InvalidHyperparameterError("clip threshold must be positive");
  const double norm = global_norm(gradients);
  if (norm > threshold) {
    const double factor = threshold / norm;
    for (auto& [name, g] : gradients) g *= factor;
  }
  return norm;
}

double xavier_bound(const Shape& shape) {
  std::size_t fan_in = 0, fan_out = 0;
  if (shape.size() == 1) {
    fan_in = 1;
    fan_out = shape[0];
  } else if (shape.size() == 2) {
    fan_out = shape[0];
    fan_in = shape[1];
  } else {
    throw ShapeError("xavier_uniform_init supports rank 1 or 2, got " + shape_string(shape));
  }
  if (fan_in == 0 || fan_out == 0) throw ShapeError("xavier_uniform_init: zero extent " + shape_string(shape));
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Tensor xavier_uniform_init(const Shape& shape, Rng& rng) {
  const double bound = xavier_bound(shape);
  Tensor t(shape);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

void sgd_step(ParameterSet& params, const Gradients& gradients, double lr) {
  if (!(lr > 0.0)) throw InvalidHyperparameterError("learning rate must be positive");
  for (const auto& [name, g] : gradients) {
    Tensor& p = params.value(name);
    require_same_shape(p, g, "sgd_step");
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
  }
}

}  // namespace aboots::ad
