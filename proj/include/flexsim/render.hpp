#pragma once

#include <cstdint>
#include <vector>

#include "flexsim/arm.hpp"

namespace flexsim {

// Binary frame, row-major, row 0 at the top of the view.
struct Frame {
  int size = 64;
  std::vector<std::uint8_t> pixels;  // size*size entries, each 0 or 1

  Frame() = default;
  explicit Frame(int s) : size(s), pixels(static_cast<size_t>(s) * s, 0) {}
  std::uint8_t& at(int row, int col) {
    return pixels[static_cast<size_t>(row) * size + col];
  }
  std::uint8_t at(int row, int col) const {
    return pixels[static_cast<size_t>(row) * size + col];
  }
  bool operator==(const Frame&) const = default;
};

// Fixed camera; the whole reachable workspace must fit inside.
struct CameraParams {
  double x0 = -0.62, x1 = 0.62;
  double y0 = -0.86, y1 = 0.38;
  int resolution = 64;
  double line_radius = 0.016;  // m, half-thickness of drawn links
};

// A pixel is foreground iff its center lies within line_radius of any
// segment. Deterministic by construction.
Frame render(const std::vector<Segment>& segments, const CameraParams& cam);

}  // namespace flexsim
