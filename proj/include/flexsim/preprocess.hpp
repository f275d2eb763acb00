#pragma once

#include <vector>

#include "flexsim/render.hpp"

namespace flexsim {

// Grayscale image with values in [0,1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> v;

  GrayImage() = default;
  GrayImage(int w, int h) : width(w), height(h), v(static_cast<size_t>(w) * h, 0.0) {}
  double& at(int row, int col) { return v[static_cast<size_t>(row) * width + col]; }
  double at(int row, int col) const {
    return v[static_cast<size_t>(row) * width + col];
  }
};

GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h);
GrayImage box_blur3(const GrayImage& img);
Frame binarize(const GrayImage& img, double threshold);  // >= threshold -> 1
Frame dilate3(const Frame& f);
Frame erode3(const Frame& f);
inline Frame closing3(const Frame& f) { return erode3(dilate3(f)); }
inline Frame opening3(const Frame& f) { return dilate3(erode3(f)); }

// Camera pipeline: resize -> background subtraction -> blur -> binarize ->
// closing -> opening. `background` is a shot of the empty scene at the same
// resolution as `raw`.
Frame preprocess(const GrayImage& raw, const GrayImage& background,
                 int out_size = 64, double threshold = 0.3);

}  // namespace flexsim
