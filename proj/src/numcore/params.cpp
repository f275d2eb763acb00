#include "numcore/params.hpp"

namespace numcore {

Tensor& ParamStore::add(const std::string& name, Tensor init, bool trainable) {
  if (has(name)) throw LookupError("parameter already registered: " + name);
  Entry e;
  e.grad = Tensor(init.shape());
  e.value = std::move(init);
  e.trainable = trainable;
  auto [it, ok] = entries_.emplace(name, std::move(e));
  (void)ok;
  return it->second.value;
}

ParamStore::Entry& ParamStore::at(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw LookupError("no such parameter: " + name);
  return it->second;
}

const ParamStore::Entry& ParamStore::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw LookupError("no such parameter: " + name);
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& [name, e] : entries_) e.grad.fill(0.0);
}

Index ParamStore::trainable_scalar_count() const {
  Index n = 0;
  for (const auto& [name, e] : entries_) {
    if (e.trainable) n += e.value.size();
  }
  return n;
}

}  // namespace numcore
