#pragma once

#include "dtxnet/model.hpp"

namespace dtxnet {

// Squared task error, weighted by alpha when a sound was commanded/heard.
double task_loss(double target, double pred, double alpha);

// Graph form: elementwise alpha-weighted squared differences, [B,1].
Value task_loss_sq(Graph& g, Value pred, const Tensor& target, double alpha);

// One training window batch, time-aligned: obs at the window start, then T
// commands with their T targets (joint targets already normalized).
struct WindowBatch {
  ObsBatch obs;
  std::vector<Tensor> commands;       // T x [B,2]
  std::vector<Tensor> task_targets;   // T x [B,1]
  std::vector<Tensor> joint_targets;  // T x [B,6], normalized
  std::vector<Tensor> image_targets;  // T x [B,1,S,S]
  int steps() const { return static_cast<int>(commands.size()); }
  Index batch() const { return commands.empty() ? 0 : commands[0].shape()[0]; }
};

struct LossTerms {
  Value total;  // w_j*l_j + w_i*l_i + w_o*l_o
  Value l_j;    // invalid when the config has no joint output
  Value l_i;    // invalid when the config has no image output
  Value l_o;
};

// Builds the rollout and the composite loss on the bound model's graph.
LossTerms train_loss(BoundModel& bm, const WindowBatch& batch);

}  // namespace dtxnet
