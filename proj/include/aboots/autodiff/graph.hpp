#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "aboots/autodiff/parameters.hpp"
#include "aboots/autodiff/tensor.hpp"

namespace aboots::ad {

using NodeId = std::uint32_t;

class Graph;

// Lightweight handle to a node of a Graph.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, NodeId id) : graph_(graph), id_(id) {}

  Graph& graph() const { return *graph_; }
  NodeId id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

  const Tensor& value() const;
  std::size_t size() const { return value().size(); }
  double item() const { return value().item(); }

  friend bool operator==(const Var& a, const Var& b) { return a.graph_ == b.graph_ && a.id_ == b.id_; }

 private:
  Graph* graph_ = nullptr;
  NodeId id_ = 0;
};

// Propagates `out_grad` (the gradient of the node) into its inputs.
using BackwardFn = std::function<void(Graph&, const Tensor& out_grad)>;

// Append-only tape of operations. A graph is confined to one thread; many
// graphs may read the same ParameterSet concurrently.
class Graph {
 public:
  Graph() = default;
  explicit Graph(const ParameterSet& params) : params_(&params) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Constant leaf. Gradients with respect to it are still recorded.
  Var input(Tensor value);
  // Parameter leaf, created once per name; the value is referenced, not copied.
  Var param(std::string_view name);

  Var record(Tensor value, std::vector<NodeId> inputs, BackwardFn backward, const char* op);

  const Tensor& value(NodeId id) const;
  const char* op(NodeId id) const { return nodes_.at(id).op; }
  const std::vector<NodeId>& inputs(NodeId id) const { return nodes_.at(id).inputs; }
  std::size_t size() const noexcept { return nodes_.size(); }
  const ParameterSet* parameters() const noexcept { return params_; }

  // Reverse sweep from a scalar node. Clears gradients from any earlier sweep.
  void backward(Var loss);

  // Gradient of the last backward sweep; zeros for nodes it did not reach.
  Tensor grad(Var v) const;
  // Used by backward functions: accumulation slot for node `id`.
  Tensor& grad_slot(NodeId id);

  // Gradients of every parameter in the attached set, zero when unreachable.
  Gradients parameter_gradients() const;
  // Gradient of one parameter from the last sweep, or null when the sweep did
  // not reach it.
  const Tensor* parameter_gradient(std::string_view name) const;

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    std::vector<NodeId> inputs;
    BackwardFn backward;
    const char* op = "";
  };

  const ParameterSet* params_ = nullptr;
  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::map<std::string, NodeId, std::less<>> param_nodes_;
};

// Runs the reverse sweep and returns parameter gradients.
Gradients backward(Graph& graph, Var loss);

}  // namespace aboots::ad
