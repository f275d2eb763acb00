#pragma once

#include <vector>

#include "flexsim/render.hpp"

namespace flexsim {

struct FlowField {
  int size = 64;
  std::vector<double> x;  // horizontal displacement, pixels/step
  std::vector<double> y;

  FlowField() = default;
  explicit FlowField(int s)
      : size(s), x(static_cast<size_t>(s) * s, 0.0), y(static_cast<size_t>(s) * s, 0.0) {}
};

// Single-iteration Lucas-Kanade flow between two binary frames: both frames
// are 3x3 box smoothed, spatial gradients come from the frame average, and
// each pixel solves the 2x2 least-squares system over a 5x5 window. Pixels
// whose system has smallest eigenvalue below `cond_threshold` report zero.
FlowField optical_flow(const Frame& prev, const Frame& cur,
                       double cond_threshold = 1e-3);

}  // namespace flexsim
