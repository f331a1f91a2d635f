#include "aboots/autodiff/parameters.hpp"

#include "aboots/errors.hpp"

namespace aboots::ad {

std::string_view group_name(Group g) {
  return g == Group::generator ? "generator" : "discriminator";
}

Group parse_group(std::string_view name) {
  if (name == "generator") return Group::generator;
  if (name == "discriminator") return Group::discriminator;
  throw ConfigError("unknown parameter group '" + std::string(name) + "'");
}

Tensor& ParameterSet::add(std::string name, Group group, Tensor init) {
  auto [it, inserted] = entries_.emplace(std::move(name), Parameter{group, std::move(init)});
  if (!inserted) throw ContractError("duplicate parameter name '" + it->first + "'");
  return it->second.value;
}

bool ParameterSet::contains(std::string_view name) const { return entries_.find(name) != entries_.end(); }

const Parameter& ParameterSet::get(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

Parameter& ParameterSet::get(std::string_view name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> ParameterSet::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, p] : entries_) out.push_back(name);
  return out;
}

std::vector<std::string> ParameterSet::names(Group group) const {
  std::vector<std::string> out;
  for (const auto& [name, p] : entries_)
    if (p.group == group) out.push_back(name);
  return out;
}

Gradients ParameterSet::zero_gradients() const {
  Gradients g;
  for (const auto& [name, p] : entries_) g.emplace(name, Tensor::zeros(p.value.shape()));
  return g;
}

bool operator==(const Parameter& a, const Parameter& b) { return a.group == b.group && a.value == b.value; }

bool operator==(const ParameterSet& a, const ParameterSet& b) { return a.entries_ == b.entries_; }

}  // namespace aboots::ad
