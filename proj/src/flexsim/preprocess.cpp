#include "flexsim/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace flexsim {

GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h) {
  GrayImage out(out_w, out_h);
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;
  for (int r = 0; r < out_h; ++r) {
    const double fy = (r + 0.5) * sy - 0.5;
    const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, img.height - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = std::clamp(fy - y0, 0.0, 1.0);
    for (int c = 0; c < out_w; ++c) {
      const double fx = (c + 0.5) * sx - 0.5;
      const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, img.width - 1);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = std::clamp(fx - x0, 0.0, 1.0);
      const double top = (1.0 - wx) * img.at(y0, x0) + wx * img.at(y0, x1);
      const double bot = (1.0 - wx) * img.at(y1, x0) + wx * img.at(y1, x1);
      out.at(r, c) = (1.0 - wy) * top + wy * bot;
    }
  }
  return out;
}

GrayImage box_blur3(const GrayImage& img) {
  GrayImage out(img.width, img.height);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      double s = 0.0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr;
          const int cc = c + dc;
          if (rr < 0 || rr >= img.height || cc < 0 || cc >= img.width) continue;
          s += img.at(rr, cc);
        }
      }
      out.at(r, c) = s / 9.0;
    }
  }
  return out;
}

Frame binarize(const GrayImage& img, double threshold) {
  if (img.width != img.height) {
    throw BadModelError("binarize: frames are square");
  }
  Frame f(img.width);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      f.at(r, c) = img.at(r, c) >= threshold ? 1 : 0;
    }
  }
  return f;
}

namespace {

Frame morph3(const Frame& f, bool dilate) {
  Frame out(f.size);
  for (int r = 0; r < f.size; ++r) {
    for (int c = 0; c < f.size; ++c) {
      bool hit = !dilate;
      for (int dr = -1; dr <= 1 && hit != dilate; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr;
          const int cc = c + dc;
          // outside the image counts as background
          const bool on = rr >= 0 && rr < f.size && cc >= 0 && cc < f.size &&
                          f.at(rr, cc) != 0;
          if (dilate && on) {
            hit = true;
            break;
          }
          if (!dilate && !on) {
            hit = false;
            break;
          }
        }
      }
      out.at(r, c) = hit ? 1 : 0;
    }
  }
  return out;
}

}  // namespace

Frame dilate3(const Frame& f) { return morph3(f, true); }
Frame erode3(const Frame& f) { return morph3(f, false); }

Frame preprocess(const GrayImage& raw, const GrayImage& background, int out_size,
                 double threshold) {
  if (raw.width != background.width || raw.height != background.height) {
    throw BadModelError("preprocess: raw/background extents disagree");
  }
  GrayImage small = resize_bilinear(raw, out_size, out_size);
  const GrayImage bg = resize_bilinear(background, out_size, out_size);
  for (size_t i = 0; i < small.v.size(); ++i) {
    small.v[i] = std::fabs(small.v[i] - bg.v[i]);
  }
  small = box_blur3(small);
  Frame f = binarize(small, threshold);
  f = closing3(f);
  f = opening3(f);
  return f;
}

}  // namespace flexsim
