#include "numcore/adam.hpp"

#include <cmath>

namespace numcore {

void adam_step(ParamStore& params, AdamState& state) {
  state.step_ += 1;
  const AdamConfig& cfg = state.cfg_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_));

  for (auto& [name, e] : params) {
    if (!e.trainable) continue;
    auto mit = state.m_.find(name);
    if (mit == state.m_.end()) {
      mit = state.m_.emplace(name, Tensor(e.value.shape())).first;
      state.v_.emplace(name, Tensor(e.value.shape()));
    }
    Tensor& m = mit->second;
    Tensor& v = state.v_.at(name);
    if (!m.same_shape(e.value) || !e.grad.same_shape(e.value)) {
      throw DimensionError("adam_step: moment/gradient shape mismatch for " + name);
    }
    const Index n = e.value.size();
    for (Index i = 0; i < n; ++i) {
      const double g = e.grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      e.value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace numcore
