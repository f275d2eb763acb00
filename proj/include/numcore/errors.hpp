#pragma once

#include <stdexcept>
#include <string>

namespace numcore {

// Shape disagreement between operands, or an operation that would produce
// an empty/negative extent.
struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

// A non-finite value (NaN/Inf) appeared in an operation result.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// A name or node was requested that the container does not hold.
struct LookupError : std::runtime_error {
  explicit LookupError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace numcore
