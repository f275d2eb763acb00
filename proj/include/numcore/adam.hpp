#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "numcore/params.hpp"

namespace numcore {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Per-parameter first/second moments plus the shared step counter.
class AdamState {
 public:
  explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  std::int64_t step_count() const { return step_; }

  // Serialization access (checkpoint.cpp).
  std::map<std::string, Tensor>& first_moments() { return m_; }
  std::map<std::string, Tensor>& second_moments() { return v_; }
  const std::map<std::string, Tensor>& first_moments() const { return m_; }
  const std::map<std::string, Tensor>& second_moments() const { return v_; }
  void set_step_count(std::int64_t s) { step_ = s; }

  friend void adam_step(ParamStore& params, AdamState& state);

 private:
  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
};

// One bias-corrected Adam update over every trainable parameter, consuming
// the gradients currently held in the store.
void adam_step(ParamStore& params, AdamState& state);

}  // namespace numcore
