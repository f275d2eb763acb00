#pragma once

#include <utility>

#include "numcore/graph.hpp"

namespace numcore {

// All spatial layers are fixed to the 2x2 kernel, stride 2, padding 1
// geometry used throughout the network.
inline constexpr Index kKernel = 2;
inline constexpr Index kStride = 2;
inline constexpr Index kPad = 1;

inline Index conv_out_extent(Index in) { return (in + 2 * kPad - kKernel) / kStride + 1; }
inline Index deconv_out_extent(Index in, Index out_pad) {
  return (in - 1) * kStride - 2 * kPad + kKernel + out_pad;
}

// Elementwise and structural -------------------------------------------------

Value add(Graph& g, Value a, Value b);
Value sub(Graph& g, Value a, Value b);
Value mul(Graph& g, Value a, Value b);
Value scale(Graph& g, Value a, double s);
Value relu(Graph& g, Value a);
Value sigmoid(Graph& g, Value a);
Value tanh(Graph& g, Value a);
Value sum_all(Graph& g, Value a);   // -> [1]
Value mean_all(Graph& g, Value a);  // -> [1]
Value reshape(Graph& g, Value a, Shape shape);
Value concat_cols(Graph& g, Value a, Value b);             // [B,n],[B,m] -> [B,n+m]
Value slice_cols(Graph& g, Value a, Index c0, Index c1);   // [B,n] -> [B,c1-c0]

// Layers ----------------------------------------------------------------------

// y[i,j] = sum_k w[j,k] * x[i,k] + b[j]
Value affine(Graph& g, Value x, Value w, Value b);

// x: [B,Ci,H,W], k: [Co,Ci,2,2], b: [Co] -> [B,Co,H',W']
Value conv2d(Graph& g, Value x, Value k, Value b);

// Transposed convolution, the linear adjoint of conv2d on the matching
// geometry. x: [B,Ci,h,w], k: [Ci,Co,2,2], b: [Co] -> [B,Co,H,W] with
// H = 2h-2+out_pad (out_pad in {0,1}).
Value deconv2d(Graph& g, Value x, Value k, Value b, Index out_pad);

struct BatchStats {
  Tensor mean;  // [C]
  Tensor var;   // [C], biased
};

// x: [B,C,H,W]. In training mode normalizes with batch statistics
// (requires B >= 2) and reports them through `batch_out` so the caller can
// maintain running averages; in inference mode uses the running statistics
// passed in (deterministic, no side effects).
Value batchnorm2d(Graph& g, Value x, Value gamma, Value beta,
                  const Tensor& run_mean, const Tensor& run_var,
                  bool training, double eps, BatchStats* batch_out = nullptr);

// One LSTM step. x: [B,I], h,c: [B,H], wx: [4H,I], wh: [4H,H], b: [4H].
// Gate order inside the packed weights is input, forget, candidate, output.
// Returns (h', c').
std::pair<Value, Value> lstm_cell(Graph& g, Value x, Value h, Value c,
                                  Value wx, Value wh, Value b);

}  // namespace numcore
