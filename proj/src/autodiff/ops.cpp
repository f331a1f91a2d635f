#include "aboots/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "aboots/errors.hpp"

namespace aboots::ad {

namespace {

void require_vector(const Tensor& t, const char* what) {
  if (t.rank() != 1) throw ShapeError(std::string(what) + ": expected a vector, got " + shape_string(t.shape()));
}

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw ShapeError(std::string(what) + ": expected a matrix, got " + shape_string(t.shape()));
}

Graph& same_graph(Var a, Var b, const char* what) {
  if (&a.graph() != &b.graph()) throw ContractError(std::string(what) + ": operands from different graphs");
  return a.graph();
}

// y += W[rows r0..r0+n) x
void gemv_rows(const Tensor& W, std::size_t r0, std::size_t n, std::span<const double> x, std::span<double> y) {
  const std::size_t cols = W.cols();
  const double* w = W.values().data() + r0 * cols;
  for (std::size_t r = 0; r < n; ++r, w += cols) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += w[c] * x[c];
    y[r] += acc;
  }
}

// x += W[rows r0..r0+n)^T y
void gemv_t_rows(const Tensor& W, std::size_t r0, std::size_t n, std::span<const double> y, std::span<double> x) {
  const std::size_t cols = W.cols();
  const double* w = W.values().data() + r0 * cols;
  for (std::size_t r = 0; r < n; ++r, w += cols) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) x[c] += w[c] * yr;
  }
}

// G[rows r0..r0+n) += y x^T
void outer_rows(Tensor& G, std::size_t r0, std::size_t n, std::span<const double> y, std::span<const double> x) {
  const std::size_t cols = G.cols();
  double* g = G.values().data() + r0 * cols;
  for (std::size_t r = 0; r < n; ++r, g += cols) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) g[c] += yr * x[c];
  }
}

template <typename F>
Var unary(Var a, const char* op, F&& f, BackwardFn bw) {
  Tensor out = a.value();
  for (double& v : out.values()) v = f(v);
  return a.graph().record(std::move(out), {a.id()}, std::move(bw), op);
}

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw InvalidHyperparameterError("softmax temperature must be positive, got " + std::to_string(tau));
}

}  // namespace

// ---------------------------------------------------------------------------

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor softmax_with_temperature(const Tensor& logits, double tau) {
  check_tau(tau);
  require_vector(logits, "softmax");
  Tensor out = logits;
  double mx = -INFINITY;
  for (double v : out.values()) mx = std::max(mx, v / tau);
  double total = 0.0;
  for (double& v : out.values()) {
    v = std::exp(v / tau - mx);
    total += v;
  }
  for (double& v : out.values()) v /= total;
  return out;
}

Tensor l2_pooling(std::span<const Tensor> sequence) {
  if (sequence.empty()) throw EmptyInputError("l2_pooling: empty sequence");
  Tensor out = Tensor::zeros(sequence.front().shape());
  for (const Tensor& v : sequence) {
    require_same_shape(out, v, "l2_pooling");
    for (std::size_t d = 0; d < v.size(); ++d) out[d] += v[d] * v[d];
  }
  const double inv = 1.0 / static_cast<double>(sequence.size());
  for (double& x : out.values()) x = std::sqrt(x * inv);
  return out;
}

namespace {

struct GruCache {
  std::vector<double> z, r, c, rh;
};

void check_gru_shapes(const Tensor& x, const Tensor& h, const Tensor& W, const Tensor& U, const Tensor& b) {
  require_vector(x, "gru_cell x");
  require_vector(h, "gru_cell h");
  require_matrix(W, "gru_cell W");
  require_matrix(U, "gru_cell U");
  require_vector(b, "gru_cell b");
  const std::size_t n = h.size();
  if (W.rows() != 3 * n || W.cols() != x.size() || U.rows() != 3 * n || U.cols() != n || b.size() != 3 * n)
    throw ShapeError("gru_cell: inconsistent shapes x=" + shape_string(x.shape()) + " h=" + shape_string(h.shape()) +
                     " W=" + shape_string(W.shape()) + " U=" + shape_string(U.shape()) +
                     " b=" + shape_string(b.shape()));
}

Tensor gru_forward_cached(const Tensor& x, const Tensor& h, const Tensor& W, const Tensor& U, const Tensor& b,
                          GruCache& cache) {
  check_gru_shapes(x, h, W, U, b);
  const std::size_t n = h.size();
  std::vector<double> pre(b.values().begin(), b.values().end());
  gemv_rows(W, 0, 3 * n, x.values(), pre);
  std::vector<double> uh(2 * n, 0.0);
  gemv_rows(U, 0, 2 * n, h.values(), uh);
  cache.z.resize(n);
  cache.r.resize(n);
  cache.rh.resize(n);
  cache.c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    cache.z[i] = sigmoid(pre[i] + uh[i]);
    cache.r[i] = sigmoid(pre[n + i] + uh[n + i]);
    cache.rh[i] = cache.r[i] * h[i];
  }
  std::vector<double> uc(n, 0.0);
  gemv_rows(U, 2 * n, n, cache.rh, uc);
  Tensor out({n});
  for (std::size_t i = 0; i < n; ++i) {
    cache.c[i] = std::tanh(pre[2 * n + i] + uc[i]);
    out[i] = cache.z[i] * h[i] + (1.0 - cache.z[i]) * cache.c[i];
  }
  return out;
}

}  // namespace

Tensor gru_cell_forward(const Tensor& x, const Tensor& h_prev, const GruWeights& w) {
  GruCache cache;
  return gru_forward_cached(x, h_prev, w.W, w.U, w.b, cache);
}

// ---------------------------------------------------------------------------

Var add(Var a, Var b) {
  Graph& g = same_graph(a, b, "add");
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  out += b.value();
  const NodeId ia = a.id(), ib = b.id();
  return g.record(std::move(out), {ia, ib}, [ia, ib](Graph& g, const Tensor& go) {
    g.grad_slot(ia) += go;
    g.grad_slot(ib) += go;
  }, "add");
}

Var sub(Var a, Var b) {
  Graph& g = same_graph(a, b, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  const NodeId ia = a.id(), ib = b.id();
  return g.record(std::move(out), {ia, ib}, [ia, ib](Graph& g, const Tensor& go) {
    g.grad_slot(ia) += go;
    Tensor& gb = g.grad_slot(ib);
    for (std::size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
  }, "sub");
}

Var mul(Var a, Var b) {
  Graph& g = same_graph(a, b, "mul");
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const NodeId ia = a.id(), ib = b.id();
  return g.record(std::move(out), {ia, ib}, [ia, ib](Graph& g, const Tensor& go) {
    const Tensor& va = g.value(ia);
    const Tensor& vb = g.value(ib);
    Tensor& ga = g.grad_slot(ia);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * vb[i];
    Tensor& gb = g.grad_slot(ib);
    for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * va[i];
  }, "mul");
}

Var scale(Var a, double s) {
  const NodeId ia = a.id();
  return unary(a, "scale", [s](double v) { return v * s; }, [ia, s](Graph& g, const Tensor& go) {
    Tensor& ga = g.grad_slot(ia);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * s;
  });
}

Var one_minus(Var a) {
  const NodeId ia = a.id();
  return unary(a, "one_minus", [](double v) { return 1.0 - v; }, [ia](Graph& g, const Tensor& go) {
    Tensor& ga = g.grad_slot(ia);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] -= go[i];
  });
}

Var sigmoid(Var a) {
  const NodeId ia = a.id();
  Tensor out = a.value();
  for (double& v : out.values()) v = sigmoid(v);
  auto y = std::make_shared<Tensor>(out);
  return a.graph().record(std::move(out), {ia}, [ia, y](Graph& g, const Tensor& go) {
    Tensor& ga = g.grad_slot(ia);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * (*y)[i] * (1.0 - (*y)[i]);
  }, "sigmoid");
}

Var tanh(Var a) {
  const NodeId ia = a.id();
  Tensor out = a.value();
  for (double& v : out.values()) v = std::tanh(v);
  auto y = std::make_shared<Tensor>(out);
  return a.graph().record(std::move(out), {ia}, [ia, y](Graph& g, const Tensor& go) {
    Tensor& ga = g.grad_slot(ia);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * (1.0 - (*y)[i] * (*y)[i]);
  }, "tanh");
}

Var log(Var a) {
  const NodeId ia = a.id();
  for (double v : a.value().values())
    if (!(v > 0.0)) throw ContractError("log of non-positive value");
  return unary(a, "log", [](double v) { return std::log(v); }, [ia](Graph& g, const Tensor& go) {
    const Tensor& x = g.value(ia);
    Tensor& ga = g.grad_slot(ia);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] / x[i];
  });
}

Var square(Var a) {
  const NodeId ia = a.id();
  return unary(a, "square", [](double v) { return v * v; }, [ia](Graph& g, const Tensor& go) {
    const Tensor& x = g.value(ia);
    Tensor& ga = g.grad_slot(ia);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += 2.0 * go[i] * x[i];
  });
}

Var matvec(Var W, Var x) {
  Graph& g = same_graph(W, x, "matvec");
  const Tensor& w = W.value();
  require_matrix(w, "matvec W");
  require_vector(x.value(), "matvec x");
  if (w.cols() != x.size())
    throw ShapeError("matvec: " + shape_string(w.shape()) + " times " + shape_string(x.value().shape()));
  Tensor out({w.rows()});
  gemv_rows(w, 0, w.rows(), x.value().values(), out.values());
  const NodeId iw = W.id(), ix = x.id();
  return g.record(std::move(out), {iw, ix}, [iw, ix](Graph& g, const Tensor& go) {
    const Tensor& w = g.value(iw);
    outer_rows(g.grad_slot(iw), 0, w.rows(), go.values(), g.value(ix).values());
    gemv_t_rows(w, 0, w.rows(), go.values(), g.grad_slot(ix).values());
  }, "matvec");
}

Var mat_t_vec(Var M, Var a) {
  Graph& g = same_graph(M, a, "mat_t_vec");
  const Tensor& m = M.value();
  require_matrix(m, "mat_t_vec M");
  require_vector(a.value(), "mat_t_vec a");
  if (m.rows() != a.size())
    throw ShapeError("mat_t_vec: " + shape_string(m.shape()) + " with weights " + shape_string(a.value().shape()));
  Tensor out({m.cols()});
  gemv_t_rows(m, 0, m.rows(), a.value().values(), out.values());
  const NodeId im = M.id(), ia = a.id();
  return g.record(std::move(out), {im, ia}, [im, ia](Graph& g, const Tensor& go) {
    const Tensor& m = g.value(im);
    // d/dM = a go^T ; d/da = M go
    outer_rows(g.grad_slot(im), 0, m.rows(), g.value(ia).values(), go.values());
    gemv_rows(m, 0, m.rows(), go.values(), g.grad_slot(ia).values());
  }, "mat_t_vec");
}

Var affine(Var W, Var x, Var b) {
  Graph& g = same_graph(W, x, "affine");
  same_graph(W, b, "affine");
  const Tensor& w = W.value();
  require_matrix(w, "affine W");
  require_vector(x.value(), "affine x");
  if (w.cols() != x.size() || b.value().shape() != Shape{w.rows()})
    throw ShapeError("affine: W=" + shape_string(w.shape()) + " x=" + shape_string(x.value().shape()) +
                     " b=" + shape_string(b.value().shape()));
  Tensor out = b.value();
  gemv_rows(w, 0, w.rows(), x.value().values(), out.values());
  const NodeId iw = W.id(), ix = x.id(), ib = b.id();
  return g.record(std::move(out), {iw, ix, ib}, [iw, ix, ib](Graph& g, const Tensor& go) {
    const Tensor& w = g.value(iw);
    outer_rows(g.grad_slot(iw), 0, w.rows(), go.values(), g.value(ix).values());
    gemv_t_rows(w, 0, w.rows(), go.values(), g.grad_slot(ix).values());
    g.grad_slot(ib) += go;
  }, "affine");
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw EmptyInputError("concat: no parts");
  Graph& g = parts.front().graph();
  std::vector<double> values;
  std::vector<NodeId> ids;
  std::vector<std::size_t> sizes;
  for (Var p : parts) {
    same_graph(parts.front(), p, "concat");
    require_vector(p.value(), "concat");
    values.insert(values.end(), p.value().values().begin(), p.value().values().end());
    ids.push_back(p.id());
    sizes.push_back(p.size());
  }
  return g.record(Tensor::vector(std::move(values)), ids, [ids, sizes](Graph& g, const Tensor& go) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      Tensor& gk = g.grad_slot(ids[k]);
      for (std::size_t i = 0; i < sizes[k]; ++i) gk[i] += go[offset + i];
      offset += sizes[k];
    }
  }, "concat");
}

Var add_n(std::span<const Var> terms) {
  if (terms.empty()) throw EmptyInputError("add_n: no terms");
  Graph& g = terms.front().graph();
  Tensor out = terms.front().value();
  std::vector<NodeId> ids{terms.front().id()};
  for (std::size_t k = 1; k < terms.size(); ++k) {
    same_graph(terms.front(), terms[k], "add_n");
    out += terms[k].value();
    ids.push_back(terms[k].id());
  }
  return g.record(std::move(out), ids, [ids](Graph& g, const Tensor& go) {
    for (NodeId id : ids) g.grad_slot(id) += go;
  }, "add_n");
}

Var weighted_sum(Var weights, std::span<const Var> vectors) {
  if (vectors.empty()) throw EmptyInputError("weighted_sum: no vectors");
  Graph& g = weights.graph();
  const Tensor& w = weights.value();
  require_vector(w, "weighted_sum weights");
  if (w.size() != vectors.size()) throw ShapeError("weighted_sum: weight count differs from vector count");
  Tensor out = Tensor::zeros(vectors.front().value().shape());
  std::vector<NodeId> ids{weights.id()};
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    same_graph(weights, vectors[j], "weighted_sum");
    const Tensor& v = vectors[j].value();
    require_same_shape(out, v, "weighted_sum");
    for (std::size_t d = 0; d < v.size(); ++d) out[d] += w[j] * v[d];
    ids.push_back(vectors[j].id());
  }
  return g.record(std::move(out), ids, [ids](Graph& g, const Tensor& go) {
    const Tensor& w = g.value(ids[0]);
    for (std::size_t j = 1; j < ids.size(); ++j) {
      const Tensor& v = g.value(ids[j]);
      double dw = 0.0;
      for (std::size_t d = 0; d < v.size(); ++d) dw += go[d] * v[d];
      g.grad_slot(ids[0])[j - 1] += dw;
      Tensor& gv = g.grad_slot(ids[j]);
      for (std::size_t d = 0; d < v.size(); ++d) gv[d] += w[j - 1] * go[d];
    }
  }, "weighted_sum");
}

Var dot(Var a, Var b) {
  Graph& g = same_graph(a, b, "dot");
  require_same_shape(a.value(), b.value(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.value()[i] * b.value()[i];
  const NodeId ia = a.id(), ib = b.id();
  return g.record(Tensor::scalar(s), {ia, ib}, [ia, ib](Graph& g, const Tensor& go) {
    const double s = go[0];
    const Tensor& va = g.value(ia);
    const Tensor& vb = g.value(ib);
    Tensor& ga = g.grad_slot(ia);
    for (std::size_t i = 0; i < va.size(); ++i) ga[i] += s * vb[i];
    Tensor& gb = g.grad_slot(ib);
    for (std::size_t i = 0; i < vb.size(); ++i) gb[i] += s * va[i];
  }, "dot");
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const NodeId ia = a.id();
  return a.graph().record(Tensor::scalar(s), {ia}, [ia](Graph& g, const Tensor& go) {
    for (double& v : g.grad_slot(ia).values()) v += go[0];
  }, "sum");
}

Var pick(Var a, std::size_t index) {
  if (index >= a.size()) throw ShapeError("pick: index out of range");
  const NodeId ia = a.id();
  return a.graph().record(Tensor::scalar(a.value()[index]), {ia}, [ia, index](Graph& g, const Tensor& go) {
    g.grad_slot(ia)[index] += go[0];
  }, "pick");
}

Var row(Var M, std::size_t index) {
  const Tensor& m = M.value();
  require_matrix(m, "row");
  if (index >= m.rows()) throw ShapeError("row: index " + std::to_string(index) + " out of range " + shape_string(m.shape()));
  auto r = m.row(index);
  const NodeId im = M.id();
  return M.graph().record(Tensor::vector(std::vector<double>(r.begin(), r.end())), {im},
                          [im, index](Graph& g, const Tensor& go) {
                            auto gr = g.grad_slot(im).row(index);
                            for (std::size_t i = 0; i < gr.size(); ++i) gr[i] += go[i];
                          },
                          "row");
}

Var softmax(Var logits, double tau) {
  Tensor p = softmax_with_temperature(logits.value(), tau);
  const NodeId il = logits.id();
  auto y = std::make_shared<Tensor>(p);
  return logits.graph().record(std::move(p), {il}, [il, y, tau](Graph& g, const Tensor& go) {
    double inner = 0.0;
    for (std::size_t i = 0; i < go.size(); ++i) inner += go[i] * (*y)[i];
    Tensor& gl = g.grad_slot(il);
    for (std::size_t i = 0; i < go.size(); ++i) gl[i] += (*y)[i] * (go[i] - inner) / tau;
  }, "softmax");
}

Var log_softmax(Var logits, double tau) {
  check_tau(tau);
  const Tensor& l = logits.value();
  require_vector(l, "log_softmax");
  double mx = -INFINITY;
  for (double v : l.values()) mx = std::max(mx, v / tau);
  double total = 0.0;
  for (double v : l.values()) total += std::exp(v / tau - mx);
  const double lse = mx + std::log(total);
  Tensor out = l;
  for (double& v : out.values()) v = v / tau - lse;
  const NodeId il = logits.id();
  auto y = std::make_shared<Tensor>(out);
  return logits.graph().record(std::move(out), {il}, [il, y, tau](Graph& g, const Tensor& go) {
    double total = 0.0;
    for (double v : go.values()) total += v;
    Tensor& gl = g.grad_slot(il);
    for (std::size_t i = 0; i < go.size(); ++i) gl[i] += (go[i] - std::exp((*y)[i]) * total) / tau;
  }, "log_softmax");
}

Var l2_pool(std::span<const Var> sequence) {
  if (sequence.empty()) throw EmptyInputError("l2_pool: empty sequence");
  std::vector<Tensor> values;
  std::vector<NodeId> ids;
  for (Var v : sequence) {
    same_graph(sequence.front(), v, "l2_pool");
    values.push_back(v.value());
    ids.push_back(v.id());
  }
  Tensor out = l2_pooling(values);
  auto y = std::make_shared<Tensor>(out);
  return sequence.front().graph().record(std::move(out), ids, [ids, y](Graph& g, const Tensor& go) {
    const double inv_j = 1.0 / static_cast<double>(ids.size());
    for (NodeId id : ids) {
      const Tensor& v = g.value(id);
      Tensor& gv = g.grad_slot(id);
      for (std::size_t d = 0; d < v.size(); ++d)
        if ((*y)[d] > 0.0) gv[d] += go[d] * v[d] * inv_j / (*y)[d];
    }
  }, "l2_pool");
}

Var gru_cell(Var x, Var h, Var W, Var U, Var b) {
  Graph& g = same_graph(x, h, "gru_cell");
  same_graph(x, W, "gru_cell");
  same_graph(x, U, "gru_cell");
  same_graph(x, b, "gru_cell");
  auto cache = std::make_shared<GruCache>();
  Tensor out = gru_forward_cached(x.value(), h.value(), W.value(), U.value(), b.value(), *cache);
  const NodeId ix = x.id(), ih = h.id(), iw = W.id(), iu = U.id(), ib = b.id();
  return g.record(std::move(out), {ix, ih, iw, iu, ib}, [=](Graph& g, const Tensor& go) {
    const Tensor& hv = g.value(ih);
    const Tensor& Wv = g.value(iw);
    const Tensor& Uv = g.value(iu);
    const std::size_t n = hv.size();
    const GruCache& c = *cache;
    std::vector<double> da(3 * n), dh(n), drh(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double dz = go[i] * (hv[i] - c.c[i]);
      const double dc = go[i] * (1.0 - c.z[i]);
      dh[i] = go[i] * c.z[i];
      da[i] = dz * c.z[i] * (1.0 - c.z[i]);
      da[2 * n + i] = dc * (1.0 - c.c[i] * c.c[i]);
    }
    gemv_t_rows(Uv, 2 * n, n, std::span<const double>(da).subspan(2 * n, n), drh);
    for (std::size_t i = 0; i < n; ++i) {
      const double dr = drh[i] * hv[i];
      dh[i] += drh[i] * c.r[i];
      da[n + i] = dr * c.r[i] * (1.0 - c.r[i]);
    }
    Tensor& gU = g.grad_slot(iu);
    outer_rows(gU, 0, 2 * n, std::span<const double>(da).first(2 * n), hv.values());
    outer_rows(gU, 2 * n, n, std::span<const double>(da).subspan(2 * n, n), c.rh);
    gemv_t_rows(Uv, 0, 2 * n, std::span<const double>(da).first(2 * n), dh);
    Tensor& gh = g.grad_slot(ih);
    for (std::size_t i = 0; i < n; ++i) gh[i] += dh[i];
    outer_rows(g.grad_slot(iw), 0, 3 * n, da, g.value(ix).values());
    gemv_t_rows(Wv, 0, 3 * n, da, g.grad_slot(ix).values());
    Tensor& gb = g.grad_slot(ib);
    for (std::size_t i = 0; i < 3 * n; ++i) gb[i] += da[i];
  }, "gru_cell");
}

Var binary_cross_entropy(Var q, double target) {
  if (q.size() != 1) throw ShapeError("binary_cross_entropy: score must be a scalar");
  if (!(target >= 0.0 && target <= 1.0)) throw ContractError("binary_cross_entropy: target outside [0,1]");
  const double raw = q.item();
  const double qc = std::clamp(raw, kProbabilityClamp, 1.0 - kProbabilityClamp);
  const double loss = -(target * std::log(qc) + (1.0 - target) * std::log(1.0 - qc));
  const bool clamped = qc != raw;
  const NodeId iq = q.id();
  return q.graph().record(Tensor::scalar(loss), {iq}, [iq, qc, target, clamped](Graph& g, const Tensor& go) {
    if (clamped) return;
    g.grad_slot(iq)[0] += go[0] * (-target / qc + (1.0 - target) / (1.0 - qc));
  }, "binary_cross_entropy");
}

}  // namespace aboots::ad
