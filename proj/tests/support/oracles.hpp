#pragma once

// Independent reference implementations used as test oracles. Everything
// here is deliberately written as plain scalar loops with no shared code
// with src/ beyond the Tensor container.

#include <functional>
#include <utility>

#include "numcore/rng.hpp"
#include "numcore/tensor.hpp"

namespace oracles {

using numcore::Index;
using numcore::Shape;
using numcore::Tensor;

// y[i,j] = sum_k w[j,k] x[i,k] + b[j], triple loop.
Tensor ref_affine(const Tensor& x, const Tensor& w, const Tensor& b);

// Direct-loop convolution, kernel 2, stride 2, pad 1.
Tensor ref_conv2d(const Tensor& x, const Tensor& k, const Tensor& b);

// Direct-loop transposed convolution (scatter form).
Tensor ref_deconv2d(const Tensor& x, const Tensor& k, const Tensor& b,
                    Index out_pad);

// Scalar-loop LSTM step; gate order input, forget, candidate, output.
std::pair<Tensor, Tensor> ref_lstm_cell(const Tensor& x, const Tensor& h,
                                        const Tensor& c, const Tensor& wx,
                                        const Tensor& wh, const Tensor& b);

// Directional derivatives (forward mode), used to test that each layer's
// backward is the adjoint of its linearization. Each returns the tangent
// of the output given tangents of every differentiable input.
Tensor jvp_affine(const Tensor& x, const Tensor& w, const Tensor& dx,
                  const Tensor& dw, const Tensor& db);
Tensor jvp_conv2d(const Tensor& x, const Tensor& k, const Tensor& dx,
                  const Tensor& dk, const Tensor& dbias);
Tensor jvp_deconv2d(const Tensor& x, const Tensor& k, const Tensor& dx,
                    const Tensor& dk, const Tensor& dbias, Index out_pad);
Tensor jvp_sigmoid(const Tensor& x, const Tensor& dx);
Tensor jvp_tanh(const Tensor& x, const Tensor& dx);
Tensor jvp_relu(const Tensor& x, const Tensor& dx);
Tensor jvp_batchnorm_train(const Tensor& x, const Tensor& gamma,
                           const Tensor& dx, const Tensor& dgamma,
                           const Tensor& dbeta, double eps);
std::pair<Tensor, Tensor> jvp_lstm_cell(const Tensor& x, const Tensor& h,
                                        const Tensor& c, const Tensor& wx,
                                        const Tensor& wh, const Tensor& b,
                                        const Tensor& dx, const Tensor& dh,
                                        const Tensor& dc, const Tensor& dwx,
                                        const Tensor& dwh, const Tensor& dbias);

inline double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (Index i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Central finite difference of f() w.r.t. every entry of `param`.
Tensor central_diff(const std::function<double()>& f, Tensor& param,
                    double step = 1e-5);

// Elementwise relative error with an absolute floor; entries where both
// sides are below the floor count as matching.
double max_rel_err(const Tensor& a, const Tensor& b, double floor = 1e-7);

}  // namespace oracles
