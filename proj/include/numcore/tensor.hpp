#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "numcore/errors.hpp"

namespace numcore {

using Index = std::int64_t;
using Shape = std::vector<Index>;

std::string shape_str(const Shape& s);
Index shape_numel(const Shape& s);

// Dense row-major tensor of 64-bit floats. Values are expected to stay
// finite; operations in ops.cpp verify this on their outputs.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index i) const { return shape_.at(static_cast<size_t>(i)); }
  Index size() const { return static_cast<Index>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](Index i) { return data_[static_cast<size_t>(i)]; }
  double operator[](Index i) const { return data_[static_cast<size_t>(i)]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  // Sum of |x|; finite iff every entry is finite (|.| rules out Inf-Inf
  // cancellation), so a single isfinite test on the result covers the tensor.
  double abs_sum() const;
  bool all_finite() const;

  double max_abs() const;

  void fill(double value);
  void add_scaled(const Tensor& other, double factor);  // this += factor*other

 private:
  Shape shape_;
  std::vector<double> data_;
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

}  // namespace numcore
