#include "flexsim/render.hpp"

#include <algorithm>
#include <cmath>

namespace flexsim {

namespace {

double point_segment_dist2(double px, double py, const Segment& s) {
  const double dx = s.x1 - s.x0;
  const double dy = s.y1 - s.y0;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) {
    t = ((px - s.x0) * dx + (py - s.y0) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
  }
  const double cx = s.x0 + t * dx - px;
  const double cy = s.y0 + t * dy - py;
  return cx * cx + cy * cy;
}

}  // namespace

Frame render(const std::vector<Segment>& segments, const CameraParams& cam) {
  const int res = cam.resolution;
  Frame f(res);
  const double sx = (cam.x1 - cam.x0) / res;
  const double sy = (cam.y1 - cam.y0) / res;
  const double r2 = cam.line_radius * cam.line_radius;

  for (const Segment& s : segments) {
    const double lo_x = std::min(s.x0, s.x1) - cam.line_radius;
    const double hi_x = std::max(s.x0, s.x1) + cam.line_radius;
    const double lo_y = std::min(s.y0, s.y1) - cam.line_radius;
    const double hi_y = std::max(s.y0, s.y1) + cam.line_radius;
    // pixel center: x = x0 + (c+0.5)sx, y = y1 - (r+0.5)sy
    const int c0 = std::max(0, static_cast<int>(std::floor((lo_x - cam.x0) / sx - 0.5)));
    const int c1 = std::min(res - 1, static_cast<int>(std::ceil((hi_x - cam.x0) / sx)));
    const int r0 = std::max(0, static_cast<int>(std::floor((cam.y1 - hi_y) / sy - 0.5)));
    const int r1 = std::min(res - 1, static_cast<int>(std::ceil((cam.y1 - lo_y) / sy)));
    for (int row = r0; row <= r1; ++row) {
      const double py = cam.y1 - (row + 0.5) * sy;
      for (int col = c0; col <= c1; ++col) {
        const double px = cam.x0 + (col + 0.5) * sx;
        if (point_segment_dist2(px, py, s) <= r2) f.at(row, col) = 1;
      }
    }
  }
  return f;
}

}  // namespace flexsim
