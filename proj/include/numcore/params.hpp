#pragma once

#include <map>
#include <string>

#include "numcore/tensor.hpp"

namespace numcore {

// Named parameters with gradient accumulators, plus non-trainable buffers
// (batch-norm running statistics live here as buffers).
class ParamStore {
 public:
  struct Entry {
    Tensor value;
    Tensor grad;  // same shape as value; zero between steps
    bool trainable = true;
  };

  Tensor& add(const std::string& name, Tensor init, bool trainable = true);
  Tensor& add_buffer(const std::string& name, Tensor init) {
    return add(name, std::move(init), false);
  }

  bool has(const std::string& name) const { return entries_.count(name) != 0; }
  Entry& at(const std::string& name);
  const Entry& at(const std::string& name) const;
  Tensor& value(const std::string& name) { return at(name).value; }
  const Tensor& value(const std::string& name) const { return at(name).value; }
  Tensor& grad(const std::string& name) { return at(name).grad; }

  void zero_grads();

  size_t size() const { return entries_.size(); }
  Index trainable_scalar_count() const;

  // Ordered iteration (std::map keeps determinism).
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::map<std::string, Entry> entries_;
};

}  // namespace numcore
