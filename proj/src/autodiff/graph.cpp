#include "aboots/autodiff/graph.hpp"

#include "aboots/errors.hpp"

namespace aboots::ad {

const Tensor& Var::value() const { return graph_->value(id_); }

Var Graph::input(Tensor value) {
  Node n;
  n.owned = std::move(value);
  n.op = "input";
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

Var Graph::param(std::string_view name) {
  if (auto it = param_nodes_.find(name); it != param_nodes_.end()) return Var(this, it->second);
  if (!params_) throw ContractError("graph has no parameter set; cannot resolve '" + std::string(name) + "'");
  Node n;
  n.external = &params_->value(name);
  n.op = "param";
  nodes_.push_back(std::move(n));
  const auto id = static_cast<NodeId>(nodes_.size() - 1);
  param_nodes_.emplace(std::string(name), id);
  return Var(this, id);
}

Var Graph::record(Tensor value, std::vector<NodeId> inputs, BackwardFn backward, const char* op) {
  for (NodeId in : inputs)
    if (in >= nodes_.size()) throw ContractError("graph input refers to a later node");
  Node n;
  n.owned = std::move(value);
  n.inputs = std::move(inputs);
  n.backward = std::move(backward);
  n.op = op;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

const Tensor& Graph::value(NodeId id) const {
  const Node& n = nodes_.at(id);
  return n.external ? *n.external : n.owned;
}

void Graph::backward(Var loss) {
  if (&loss.graph() != this) throw ContractError("backward: loss belongs to another graph");
  if (value(loss.id()).size() != 1) throw ContractError("backward: loss must be a scalar");
  grads_.assign(nodes_.size(), Tensor());
  grads_[loss.id()] = Tensor(value(loss.id()).shape(), {1.0});
  for (NodeId id = loss.id() + 1; id-- > 0;) {
    if (grads_[id].empty() || !nodes_[id].backward) continue;
    // Inputs precede the node, so slots touched below never alias `g`.
    const Tensor& g = grads_[id];
    nodes_[id].backward(*this, g);
  }
}

Tensor Graph::grad(Var v) const {
  if (v.id() < grads_.size() && !grads_[v.id()].empty()) return grads_[v.id()];
  return Tensor::zeros(value(v.id()).shape());
}

Tensor& Graph::grad_slot(NodeId id) {
  Tensor& g = grads_.at(id);
  if (g.empty()) g = Tensor::zeros(value(id).shape());
  return g;
}

Gradients Graph::parameter_gradients() const {
  if (!params_) return {};
  Gradients out;
  for (const auto& [name, p] : *params_) {
    auto it = param_nodes_.find(name);
    if (it != param_nodes_.end() && it->second < grads_.size() && !grads_[it->second].empty())
      out.emplace(name, grads_[it->second]);
    else
      out.emplace(name, Tensor::zeros(p.value.shape()));
  }
  return out;
}

const Tensor* Graph::parameter_gradient(std::string_view name) const {
  auto it = param_nodes_.find(name);
  if (it == param_nodes_.end() || it->second >= grads_.size() || grads_[it->second].empty()) return nullptr;
  return &grads_[it->second];
}

Gradients backward(Graph& graph, Var loss) {
  graph.backward(loss);
  return graph.parameter_gradients();
}

}  // namespace aboots::ad
