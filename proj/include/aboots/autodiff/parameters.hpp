#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "aboots/autodiff/tensor.hpp"

namespace aboots::ad {

// Which optimizer step owns a parameter. The shared encoder and the word
// embeddings belong to the generator.
enum class Group { generator, discriminator };

std::string_view group_name(Group g);
Group parse_group(std::string_view name);

struct Parameter {
  Group group;
  Tensor value;
};

using Gradients = std::map<std::string, Tensor, std::less<>>;

// Named model parameters. Entries are stored node-stably so graph leaves can
// hold references to them across inserts.
class ParameterSet {
 public:
  Tensor& add(std::string name, Group group, Tensor init);

  bool contains(std::string_view name) const;
  const Parameter& get(std::string_view name) const;
  Parameter& get(std::string_view name);
  const Tensor& value(std::string_view name) const { return get(name).value; }
  Tensor& value(std::string_view name) { return get(name).value; }

  std::vector<std::string> names() const;
  std::vector<std::string> names(Group group) const;
  std::size_t size() const noexcept { return entries_.size(); }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }

  // Zero tensors for every parameter (optionally only one group).
  Gradients zero_gradients() const;

  friend bool operator==(const ParameterSet& a, const ParameterSet& b);

 private:
  std::map<std::string, Parameter, std::less<>> entries_;
};

bool operator==(const Parameter& a, const Parameter& b);

}  // namespace aboots::ad
