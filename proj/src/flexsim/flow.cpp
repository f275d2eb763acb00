#include "flexsim/flow.hpp"

#include <cmath>

#include "flexsim/arm.hpp"

namespace flexsim {

namespace {

std::vector<double> box3(const std::vector<double>& img, int n) {
  std::vector<double> out(img.size(), 0.0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      double s = 0.0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr;
          const int cc = c + dc;
          if (rr < 0 || rr >= n || cc < 0 || cc >= n) continue;
          s += img[static_cast<size_t>(rr) * n + cc];
        }
      }
      out[static_cast<size_t>(r) * n + c] = s / 9.0;
    }
  }
  return out;
}

}  // namespace

FlowField optical_flow(const Frame& prev, const Frame& cur, double cond_threshold) {
  if (prev.size != cur.size) {
    throw BadModelError("optical_flow: frame extents disagree");
  }
  const int n = prev.size;
  const size_t total = static_cast<size_t>(n) * n;

  std::vector<double> a(total), b(total);
  for (size_t i = 0; i < total; ++i) {
    a[i] = static_cast<double>(prev.pixels[i]);
    b[i] = static_cast<double>(cur.pixels[i]);
  }
  a = box3(a, n);
  b = box3(b, n);

  std::vector<double> ix(total, 0.0), iy(total, 0.0), it(total, 0.0);
  auto avg = [&](int r, int c) -> double {
    if (r < 0 || r >= n || c < 0 || c >= n) return 0.0;
    const size_t i = static_cast<size_t>(r) * n + c;
    return 0.5 * (a[i] + b[i]);
  };
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const size_t i = static_cast<size_t>(r) * n + c;
      ix[i] = 0.5 * (avg(r, c + 1) - avg(r, c - 1));
      iy[i] = 0.5 * (avg(r + 1, c) - avg(r - 1, c));
      it[i] = b[i] - a[i];
    }
  }

  FlowField flow(n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      double sxx = 0.0, sxy = 0.0, syy = 0.0, sxt = 0.0, syt = 0.0;
      for (int dr = -2; dr <= 2; ++dr) {
        for (int dc = -2; dc <= 2; ++dc) {
          const int rr = r + dr;
          const int cc = c + dc;
          if (rr < 0 || rr >= n || cc < 0 || cc >= n) continue;
          const size_t i = static_cast<size_t>(rr) * n + cc;
          sxx += ix[i] * ix[i];
          sxy += ix[i] * iy[i];
          syy += iy[i] * iy[i];
          sxt += ix[i] * it[i];
          syt += iy[i] * it[i];
        }
      }
      const double tr = sxx + syy;
      const double det_g = sxx * syy - sxy * sxy;
      const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det_g));
      const double lambda_min = 0.5 * (tr - disc);
      const size_t i = static_cast<size_t>(r) * n + c;
      if (lambda_min < cond_threshold) continue;  // ill-conditioned: zero flow
      // G [u v]^T = -[sxt syt]^T
      flow.x[i] = (-sxt * syy + syt * sxy) / det_g;
      flow.y[i] = (-syt * sxx + sxt * sxy) / det_g;
    }
  }
  return flow;
}

}  // namespace flexsim
