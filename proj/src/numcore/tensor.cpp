#include "numcore/tensor.hpp"

#include <cmath>
#include <sstream>

namespace numcore {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << "x";
    os << s[i];
  }
  os << "]";
  return os.str();
}

Index shape_numel(const Shape& s) {
  Index n = 1;
  for (Index e : s) {
    if (e <= 0) throw DimensionError("non-positive extent in " + shape_str(s));
    n *= e;
  }
  return n;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<size_t>(shape_numel(shape_)), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (shape_numel(shape_) != static_cast<Index>(data_.size())) {
    throw DimensionError("value count does not match shape " + shape_str(shape_));
  }
}

Tensor Tensor::full(Shape shape, double value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

double Tensor::abs_sum() const {
  double s = 0.0;
  for (double v : data_) s += std::fabs(v);
  return s;
}

bool Tensor::all_finite() const { return std::isfinite(abs_sum()); }

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::fabs(v));
  return m;
}

void Tensor::fill(double value) {
  for (double& v : data_) v = value;
}

void Tensor::add_scaled(const Tensor& other, double factor) {
  check_same_shape(*this, other, "add_scaled");
  const double* src = other.data();
  double* dst = data();
  const Index n = size();
  for (Index i = 0; i < n; ++i) dst[i] += factor * src[i];
}

}  // namespace numcore
