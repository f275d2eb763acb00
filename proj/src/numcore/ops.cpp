#include "numcore/ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>

namespace numcore {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<RowMat>;
using CMapM = Eigen::Map<const RowMat>;

MapM map2(Tensor& t, Index rows, Index cols) { return MapM(t.data(), rows, cols); }
CMapM cmap2(const Tensor& t, Index rows, Index cols) {
  return CMapM(t.data(), rows, cols);
}

double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Gather the 2x2/stride-2/pad-1 receptive fields of a [C,H,W] image into a
// [4C, OH*OW] matrix; row index is c*4 + kh*2 + kw. Out-of-range taps
// (padding) read as zero.
void im2col(const double* x, Index c_count, Index h, Index w, double* col,
            Index oh_count, Index ow_count) {
  const Index ohw = oh_count * ow_count;
  for (Index c = 0; c < c_count; ++c) {
    const double* xc = x + c * h * w;
    for (Index kh = 0; kh < kKernel; ++kh) {
      for (Index kw = 0; kw < kKernel; ++kw) {
        double* crow = col + (c * 4 + kh * 2 + kw) * ohw;
        for (Index oh = 0; oh < oh_count; ++oh) {
          const Index ih = oh * kStride - kPad + kh;
          double* dst = crow + oh * ow_count;
          if (ih < 0 || ih >= h) {
            std::fill(dst, dst + ow_count, 0.0);
            continue;
          }
          const double* xrow = xc + ih * w;
          for (Index ow = 0; ow < ow_count; ++ow) {
            const Index iw = ow * kStride - kPad + kw;
            dst[ow] = (iw >= 0 && iw < w) ? xrow[iw] : 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add the column matrix back into the image.
void col2im_add(const double* col, Index c_count, Index h, Index w, double* x,
                Index oh_count, Index ow_count) {
  const Index ohw = oh_count * ow_count;
  for (Index c = 0; c < c_count; ++c) {
    double* xc = x + c * h * w;
    for (Index kh = 0; kh < kKernel; ++kh) {
      for (Index kw = 0; kw < kKernel; ++kw) {
        const double* crow = col + (c * 4 + kh * 2 + kw) * ohw;
        for (Index oh = 0; oh < oh_count; ++oh) {
          const Index ih = oh * kStride - kPad + kh;
          if (ih < 0 || ih >= h) continue;
          const double* src = crow + oh * ow_count;
          double* xrow = xc + ih * w;
          for (Index ow = 0; ow < ow_count; ++ow) {
            const Index iw = ow * kStride - kPad + kw;
            if (iw >= 0 && iw < w) xrow[iw] += src[ow];
          }
        }
      }
    }
  }
}

void require(bool ok, const char* msg) {
  if (!ok) throw DimensionError(msg);
}

}  // namespace

// Elementwise and structural --------------------------------------------------

Value add(Graph& g, Value a, Value b) {
  check_same_shape(a.tensor(), b.tensor(), "add");
  Tensor out = a.tensor();
  out.add_scaled(b.tensor(), 1.0);
  Node* an = a.node();
  Node* bn = b.node();
  return g.make(std::move(out), {a, b}, [an, bn](Node& self) {
    if (an->needs_grad()) Graph::accumulate_grad(an, self.grad());
    if (bn->needs_grad()) Graph::accumulate_grad(bn, self.grad());
  });
}

Value sub(Graph& g, Value a, Value b) {
  check_same_shape(a.tensor(), b.tensor(), "sub");
  Tensor out = a.tensor();
  out.add_scaled(b.tensor(), -1.0);
  Node* an = a.node();
  Node* bn = b.node();
  return g.make(std::move(out), {a, b}, [an, bn](Node& self) {
    if (an->needs_grad()) Graph::accumulate_grad(an, self.grad());
    if (bn->needs_grad()) Graph::grad_buffer(bn).add_scaled(self.grad(), -1.0);
  });
}

Value mul(Graph& g, Value a, Value b) {
  check_same_shape(a.tensor(), b.tensor(), "mul");
  Tensor out(a.shape());
  const Index n = out.size();
  for (Index i = 0; i < n; ++i) out[i] = a.tensor()[i] * b.tensor()[i];
  Node* an = a.node();
  Node* bn = b.node();
  return g.make(std::move(out), {a, b}, [an, bn](Node& self) {
    const Tensor& dy = self.grad();
    const Index m = dy.size();
    if (an->needs_grad()) {
      Tensor& da = Graph::grad_buffer(an);
      const Tensor& bv = bn->value();
      for (Index i = 0; i < m; ++i) da[i] += dy[i] * bv[i];
    }
    if (bn->needs_grad()) {
      Tensor& db = Graph::grad_buffer(bn);
      const Tensor& av = an->value();
      for (Index i = 0; i < m; ++i) db[i] += dy[i] * av[i];
    }
  });
}

Value scale(Graph& g, Value a, double s) {
  Tensor out(a.shape());
  const Index n = out.size();
  for (Index i = 0; i < n; ++i) out[i] = s * a.tensor()[i];
  Node* an = a.node();
  return g.make(std::move(out), {a}, [an, s](Node& self) {
    if (an->needs_grad()) Graph::grad_buffer(an).add_scaled(self.grad(), s);
  });
}

Value relu(Graph& g, Value a) {
  Tensor out(a.shape());
  const Index n = out.size();
  for (Index i = 0; i < n; ++i) out[i] = std::max(0.0, a.tensor()[i]);
  Node* an = a.node();
  return g.make(std::move(out), {a}, [an](Node& self) {
    if (!an->needs_grad()) return;
    const Tensor& dy = self.grad();
    const Tensor& x = an->value();
    Tensor& dx = Graph::grad_buffer(an);
    for (Index i = 0; i < dy.size(); ++i) {
      if (x[i] > 0.0) dx[i] += dy[i];
    }
  });
}

Value sigmoid(Graph& g, Value a) {
  Tensor out(a.shape());
  const Index n = out.size();
  for (Index i = 0; i < n; ++i) out[i] = sigmoid_scalar(a.tensor()[i]);
  Node* an = a.node();
  return g.make(std::move(out), {a}, [an](Node& self) {
    if (!an->needs_grad()) return;
    const Tensor& dy = self.grad();
    const Tensor& y = self.value();
    Tensor& dx = Graph::grad_buffer(an);
    for (Index i = 0; i < dy.size(); ++i) dx[i] += dy[i] * y[i] * (1.0 - y[i]);
  });
}

Value tanh(Graph& g, Value a) {
  Tensor out(a.shape());
  const Index n = out.size();
  for (Index i = 0; i < n; ++i) out[i] = std::tanh(a.tensor()[i]);
  Node* an = a.node();
  return g.make(std::move(out), {a}, [an](Node& self) {
    if (!an->needs_grad()) return;
    const Tensor& dy = self.grad();
    const Tensor& y = self.value();
    Tensor& dx = Graph::grad_buffer(an);
    for (Index i = 0; i < dy.size(); ++i) dx[i] += dy[i] * (1.0 - y[i] * y[i]);
  });
}

Value sum_all(Graph& g, Value a) {
  double s = 0.0;
  for (Index i = 0; i < a.tensor().size(); ++i) s += a.tensor()[i];
  Node* an = a.node();
  return g.make(Tensor::scalar(s), {a}, [an](Node& self) {
    if (!an->needs_grad()) return;
    const double dy = self.grad()[0];
    Tensor& dx = Graph::grad_buffer(an);
    for (Index i = 0; i < dx.size(); ++i) dx[i] += dy;
  });
}

Value mean_all(Graph& g, Value a) {
  return scale(g, sum_all(g, a), 1.0 / static_cast<double>(a.tensor().size()));
}

Value reshape(Graph& g, Value a, Shape shape) {
  if (shape_numel(shape) != a.tensor().size()) {
    throw DimensionError("reshape: element count mismatch " +
                         shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  Tensor out(std::move(shape));
  std::copy(a.tensor().data(), a.tensor().data() + a.tensor().size(), out.data());
  Node* an = a.node();
  return g.make(std::move(out), {a}, [an](Node& self) {
    if (!an->needs_grad()) return;
    const Tensor& dy = self.grad();
    Tensor& dx = Graph::grad_buffer(an);
    for (Index i = 0; i < dy.size(); ++i) dx[i] += dy[i];
  });
}

Value concat_cols(Graph& g, Value a, Value b) {
  require(a.shape().size() == 2 && b.shape().size() == 2, "concat_cols: rank-2 only");
  require(a.shape()[0] == b.shape()[0], "concat_cols: batch mismatch");
  const Index rows = a.shape()[0];
  const Index ca = a.shape()[1];
  const Index cb = b.shape()[1];
  Tensor out({rows, ca + cb});
  for (Index r = 0; r < rows; ++r) {
    std::copy(a.tensor().data() + r * ca, a.tensor().data() + (r + 1) * ca,
              out.data() + r * (ca + cb));
    std::copy(b.tensor().data() + r * cb, b.tensor().data() + (r + 1) * cb,
              out.data() + r * (ca + cb) + ca);
  }
  Node* an = a.node();
  Node* bn = b.node();
  return g.make(std::move(out), {a, b}, [an, bn, rows, ca, cb](Node& self) {
    const Tensor& dy = self.grad();
    if (an->needs_grad()) {
      Tensor& da = Graph::grad_buffer(an);
      for (Index r = 0; r < rows; ++r)
        for (Index j = 0; j < ca; ++j) da[r * ca + j] += dy[r * (ca + cb) + j];
    }
    if (bn->needs_grad()) {
      Tensor& db = Graph::grad_buffer(bn);
      for (Index r = 0; r < rows; ++r)
        for (Index j = 0; j < cb; ++j)
          db[r * cb + j] += dy[r * (ca + cb) + ca + j];
    }
  });
}

Value slice_cols(Graph& g, Value a, Index c0, Index c1) {
  require(a.shape().size() == 2, "slice_cols: rank-2 only");
  const Index rows = a.shape()[0];
  const Index cols = a.shape()[1];
  require(0 <= c0 && c0 < c1 && c1 <= cols, "slice_cols: bad column range");
  const Index w = c1 - c0;
  Tensor out({rows, w});
  for (Index r = 0; r < rows; ++r)
    std::copy(a.tensor().data() + r * cols + c0, a.tensor().data() + r * cols + c1,
              out.data() + r * w);
  Node* an = a.node();
  return g.make(std::move(out), {a}, [an, rows, cols, c0, w](Node& self) {
    if (!an->needs_grad()) return;
    const Tensor& dy = self.grad();
    Tensor& dx = Graph::grad_buffer(an);
    for (Index r = 0; r < rows; ++r)
      for (Index j = 0; j < w; ++j) dx[r * cols + c0 + j] += dy[r * w + j];
  });
}

// Layers ------------------------------------------------------------------------

Value affine(Graph& g, Value x, Value w, Value b) {
  require(x.shape().size() == 2 && w.shape().size() == 2 && b.shape().size() == 1,
          "affine: expects x[B,n], w[m,n], b[m]");
  const Index batch = x.shape()[0];
  const Index n = x.shape()[1];
  const Index m = w.shape()[0];
  if (w.shape()[1] != n || b.shape()[0] != m) {
    throw DimensionError("affine: inner extents disagree, x" + shape_str(x.shape()) +
                         " w" + shape_str(w.shape()) + " b" + shape_str(b.shape()));
  }
  Tensor out({batch, m});
  {
    MapM ym = map2(out, batch, m);
    ym.noalias() = cmap2(x.tensor(), batch, n) * cmap2(w.tensor(), m, n).transpose();
    ym.rowwise() += CMapM(b.tensor().data(), 1, m).row(0);
  }
  Node* xn = x.node();
  Node* wn = w.node();
  Node* bn = b.node();
  return g.make(std::move(out), {x, w, b}, [xn, wn, bn, batch, n, m](Node& self) {
    CMapM dym(self.grad().data(), batch, m);
    if (xn->needs_grad()) {
      MapM dxm = map2(Graph::grad_buffer(xn), batch, n);
      dxm.noalias() += dym * cmap2(wn->value(), m, n);
    }
    if (wn->needs_grad()) {
      MapM dwm = map2(Graph::grad_buffer(wn), m, n);
      dwm.noalias() += dym.transpose() * cmap2(xn->value(), batch, n);
    }
    if (bn->needs_grad()) {
      MapM dbm = map2(Graph::grad_buffer(bn), 1, m);
      dbm.row(0) += dym.colwise().sum();
    }
  });
}

Value conv2d(Graph& g, Value x, Value k, Value b) {
  require(x.shape().size() == 4 && k.shape().size() == 4 && b.shape().size() == 1,
          "conv2d: expects x[B,Ci,H,W], k[Co,Ci,2,2], b[Co]");
  const Index batch = x.shape()[0];
  const Index ci = x.shape()[1];
  const Index h = x.shape()[2];
  const Index w = x.shape()[3];
  const Index co = k.shape()[0];
  if (k.shape()[1] != ci || k.shape()[2] != kKernel || k.shape()[3] != kKernel) {
    throw DimensionError("conv2d: kernel shape " + shape_str(k.shape()) +
                         " does not match input channels " + std::to_string(ci));
  }
  require(b.shape()[0] == co, "conv2d: bias extent mismatch");
  const Index oh = conv_out_extent(h);
  const Index ow = conv_out_extent(w);
  if (oh <= 0 || ow <= 0) {
    throw DimensionError("conv2d: non-positive output extent");
  }
  const Index ohw = oh * ow;

  Tensor out({batch, co, oh, ow});
  {
    Tensor col({4 * ci, ohw});
    CMapM km = cmap2(k.tensor(), co, 4 * ci);
    for (Index s = 0; s < batch; ++s) {
      im2col(x.tensor().data() + s * ci * h * w, ci, h, w, col.data(), oh, ow);
      MapM ym(out.data() + s * co * ohw, co, ohw);
      ym.noalias() = km * cmap2(col, 4 * ci, ohw);
      for (Index c = 0; c < co; ++c) ym.row(c).array() += b.tensor()[c];
    }
  }

  Node* xn = x.node();
  Node* kn = k.node();
  Node* bn = b.node();
  return g.make(std::move(out), {x, k, b},
                [xn, kn, bn, batch, ci, h, w, co, oh, ow](Node& self) {
    const Index ohw = oh * ow;
    const Tensor& dy = self.grad();
    Tensor col({4 * ci, ohw});
    CMapM km = cmap2(kn->value(), co, 4 * ci);
    for (Index s = 0; s < batch; ++s) {
      CMapM dym(dy.data() + s * co * ohw, co, ohw);
      if (kn->needs_grad()) {
        im2col(xn->value().data() + s * ci * h * w, ci, h, w, col.data(), oh, ow);
        MapM dkm = map2(Graph::grad_buffer(kn), co, 4 * ci);
        dkm.noalias() += dym * cmap2(col, 4 * ci, ohw).transpose();
      }
      if (xn->needs_grad()) {
        MapM dcol = map2(col, 4 * ci, ohw);
        dcol.noalias() = km.transpose() * dym;
        col2im_add(col.data(), ci, h, w,
                   Graph::grad_buffer(xn).data() + s * ci * h * w, oh, ow);
      }
      if (bn->needs_grad()) {
        Tensor& db = Graph::grad_buffer(bn);
        for (Index c = 0; c < co; ++c) db[c] += dym.row(c).sum();
      }
    }
  });
}

Value deconv2d(Graph& g, Value x, Value k, Value b, Index out_pad) {
  require(x.shape().size() == 4 && k.shape().size() == 4 && b.shape().size() == 1,
          "deconv2d: expects x[B,Ci,h,w], k[Ci,Co,2,2], b[Co]");
  require(out_pad == 0 || out_pad == 1, "deconv2d: out_pad must be 0 or 1");
  const Index batch = x.shape()[0];
  const Index ci = x.shape()[1];
  const Index ih = x.shape()[2];
  const Index iw = x.shape()[3];
  if (k.shape()[0] != ci || k.shape()[2] != kKernel || k.shape()[3] != kKernel) {
    throw DimensionError("deconv2d: kernel shape " + shape_str(k.shape()) +
                         " does not match input channels " + std::to_string(ci));
  }
  const Index co = k.shape()[1];
  require(b.shape()[0] == co, "deconv2d: bias extent mismatch");
  const Index oh = deconv_out_extent(ih, out_pad);
  const Index ow = deconv_out_extent(iw, out_pad);
  if (oh <= 0 || ow <= 0) {
    throw DimensionError("deconv2d: non-positive output extent");
  }
  const Index ihw = ih * iw;

  Tensor out({batch, co, oh, ow});
  {
    Tensor col({4 * co, ihw});
    CMapM kvm = cmap2(k.tensor(), ci, 4 * co);
    for (Index s = 0; s < batch; ++s) {
      MapM colm = map2(col, 4 * co, ihw);
      colm.noalias() =
          kvm.transpose() * CMapM(x.tensor().data() + s * ci * ihw, ci, ihw);
      double* yb = out.data() + s * co * oh * ow;
      col2im_add(col.data(), co, oh, ow, yb, ih, iw);
      for (Index c = 0; c < co; ++c) {
        double* row = yb + c * oh * ow;
        for (Index i = 0; i < oh * ow; ++i) row[i] += b.tensor()[c];
      }
    }
  }

  Node* xn = x.node();
  Node* kn = k.node();
  Node* bn = b.node();
  return g.make(std::move(out), {x, k, b},
                [xn, kn, bn, batch, ci, ih, iw, co, oh, ow](Node& self) {
    const Index ihw = ih * iw;
    const Tensor& dy = self.grad();
    Tensor col({4 * co, ihw});
    CMapM kvm = cmap2(kn->value(), ci, 4 * co);
    for (Index s = 0; s < batch; ++s) {
      const double* dyb = dy.data() + s * co * oh * ow;
      im2col(dyb, co, oh, ow, col.data(), ih, iw);
      if (xn->needs_grad()) {
        MapM dxm(Graph::grad_buffer(xn).data() + s * ci * ihw, ci, ihw);
        dxm.noalias() += kvm * cmap2(col, 4 * co, ihw);
      }
      if (kn->needs_grad()) {
        MapM dkm = map2(Graph::grad_buffer(kn), ci, 4 * co);
        dkm.noalias() += CMapM(xn->value().data() + s * ci * ihw, ci, ihw) *
                         cmap2(col, 4 * co, ihw).transpose();
      }
      if (bn->needs_grad()) {
        Tensor& db = Graph::grad_buffer(bn);
        for (Index c = 0; c < co; ++c) {
          const double* row = dyb + c * oh * ow;
          double s2 = 0.0;
          for (Index i = 0; i < oh * ow; ++i) s2 += row[i];
          db[c] += s2;
        }
      }
    }
  });
}

Value batchnorm2d(Graph& g, Value x, Value gamma, Value beta,
                  const Tensor& run_mean, const Tensor& run_var, bool training,
                  double eps, BatchStats* batch_out) {
  require(x.shape().size() == 4, "batchnorm2d: expects x[B,C,H,W]");
  const Index batch = x.shape()[0];
  const Index ch = x.shape()[1];
  const Index hw = x.shape()[2] * x.shape()[3];
  require(gamma.shape().size() == 1 && gamma.shape()[0] == ch, "batchnorm2d: gamma");
  require(beta.shape().size() == 1 && beta.shape()[0] == ch, "batchnorm2d: beta");
  if (training && batch < 2) {
    throw DimensionError("batchnorm2d: training mode requires batch >= 2");
  }
  if (!training &&
      (run_mean.size() != ch || run_var.size() != ch)) {
    throw DimensionError("batchnorm2d: running statistics extent mismatch");
  }

  const Index n_per_ch = batch * hw;
  auto xhat = std::make_shared<Tensor>(x.shape());
  auto invstd = std::make_shared<Tensor>(Shape{ch});

  Tensor mean({ch});
  Tensor var({ch});
  if (training) {
    for (Index c = 0; c < ch; ++c) {
      double sum = 0.0;
      for (Index s = 0; s < batch; ++s) {
        const double* p = x.tensor().data() + (s * ch + c) * hw;
        for (Index i = 0; i < hw; ++i) sum += p[i];
      }
      const double mu = sum / static_cast<double>(n_per_ch);
      double sq = 0.0;
      for (Index s = 0; s < batch; ++s) {
        const double* p = x.tensor().data() + (s * ch + c) * hw;
        for (Index i = 0; i < hw; ++i) sq += (p[i] - mu) * (p[i] - mu);
      }
      mean[c] = mu;
      var[c] = sq / static_cast<double>(n_per_ch);
    }
  } else {
    mean = run_mean;
    var = run_var;
  }

  Tensor out(x.shape());
  for (Index c = 0; c < ch; ++c) {
    const double is = 1.0 / std::sqrt(var[c] + eps);
    (*invstd)[c] = is;
    const double gc = gamma.tensor()[c];
    const double bc = beta.tensor()[c];
    for (Index s = 0; s < batch; ++s) {
      const double* p = x.tensor().data() + (s * ch + c) * hw;
      double* xh = xhat->data() + (s * ch + c) * hw;
      double* y = out.data() + (s * ch + c) * hw;
      for (Index i = 0; i < hw; ++i) {
        xh[i] = (p[i] - mean[c]) * is;
        y[i] = gc * xh[i] + bc;
      }
    }
  }

  if (batch_out != nullptr) {
    batch_out->mean = mean;
    batch_out->var = var;
  }

  Node* xn = x.node();
  Node* gn = gamma.node();
  Node* bn = beta.node();
  return g.make(std::move(out), {x, gamma, beta},
                [xn, gn, bn, xhat, invstd, training, batch, ch, hw](Node& self) {
    const Tensor& dy = self.grad();
    const Index n_per_ch = batch * hw;
    for (Index c = 0; c < ch; ++c) {
      const double gc = gn->value()[c];
      const double is = (*invstd)[c];

      double sum_dy = 0.0;
      double sum_dy_xhat = 0.0;
      for (Index s = 0; s < batch; ++s) {
        const double* d = dy.data() + (s * ch + c) * hw;
        const double* xh = xhat->data() + (s * ch + c) * hw;
        for (Index i = 0; i < hw; ++i) {
          sum_dy += d[i];
          sum_dy_xhat += d[i] * xh[i];
        }
      }
      if (gn->needs_grad()) Graph::grad_buffer(gn)[c] += sum_dy_xhat;
      if (bn->needs_grad()) Graph::grad_buffer(bn)[c] += sum_dy;

      if (xn->needs_grad()) {
        Tensor& dx = Graph::grad_buffer(xn);
        if (training) {
          // Batch statistics depend on x, so their derivative terms enter:
          // dx = invstd * (dxhat - mean(dxhat) - xhat * mean(dxhat*xhat)).
          const double m_dy = sum_dy / static_cast<double>(n_per_ch);
          const double m_dy_xhat = sum_dy_xhat / static_cast<double>(n_per_ch);
          for (Index s = 0; s < batch; ++s) {
            const double* d = dy.data() + (s * ch + c) * hw;
            const double* xh = xhat->data() + (s * ch + c) * hw;
            double* dxp = dx.data() + (s * ch + c) * hw;
            for (Index i = 0; i < hw; ++i) {
              dxp[i] += gc * is * (d[i] - m_dy - xh[i] * m_dy_xhat);
            }
          }
        } else {
          for (Index s = 0; s < batch; ++s) {
            const double* d = dy.data() + (s * ch + c) * hw;
            double* dxp = dx.data() + (s * ch + c) * hw;
            for (Index i = 0; i < hw; ++i) dxp[i] += gc * is * d[i];
          }
        }
      }
    }
  });
}

std::pair<Value, Value> lstm_cell(Graph& g, Value x, Value h, Value c, Value wx,
                                  Value wh, Value b) {
  require(x.shape().size() == 2 && h.shape().size() == 2 && c.shape().size() == 2,
          "lstm_cell: x, h, c must be rank-2");
  const Index batch = x.shape()[0];
  const Index in_dim = x.shape()[1];
  const Index hid = h.shape()[1];
  require(h.shape()[0] == batch && c.shape()[0] == batch, "lstm_cell: batch mismatch");
  require(c.shape()[1] == hid, "lstm_cell: cell extent mismatch");
  require(wx.shape().size() == 2 && wx.shape()[0] == 4 * hid && wx.shape()[1] == in_dim,
          "lstm_cell: wx must be [4H,I]");
  require(wh.shape().size() == 2 && wh.shape()[0] == 4 * hid && wh.shape()[1] == hid,
          "lstm_cell: wh must be [4H,H]");
  require(b.shape().size() == 1 && b.shape()[0] == 4 * hid, "lstm_cell: b must be [4H]");

  // gates: columns [0,H) input, [H,2H) forget, [2H,3H) candidate, [3H,4H) output
  auto gates = std::make_shared<Tensor>(Shape{batch, 4 * hid});
  {
    MapM z = map2(*gates, batch, 4 * hid);
    z.noalias() = cmap2(x.tensor(), batch, in_dim) *
                  cmap2(wx.tensor(), 4 * hid, in_dim).transpose();
    z.noalias() += cmap2(h.tensor(), batch, hid) *
                   cmap2(wh.tensor(), 4 * hid, hid).transpose();
    z.rowwise() += CMapM(b.tensor().data(), 1, 4 * hid).row(0);
  }
  for (Index r = 0; r < batch; ++r) {
    double* z = gates->data() + r * 4 * hid;
    for (Index j = 0; j < hid; ++j) z[j] = sigmoid_scalar(z[j]);
    for (Index j = hid; j < 2 * hid; ++j) z[j] = sigmoid_scalar(z[j]);
    for (Index j = 2 * hid; j < 3 * hid; ++j) z[j] = std::tanh(z[j]);
    for (Index j = 3 * hid; j < 4 * hid; ++j) z[j] = sigmoid_scalar(z[j]);
  }

  auto tanh_c = std::make_shared<Tensor>(Shape{batch, hid});
  Tensor packed({batch, 2 * hid});  // columns [0,H) = h', [H,2H) = c'
  for (Index r = 0; r < batch; ++r) {
    const double* z = gates->data() + r * 4 * hid;
    const double* cp = c.tensor().data() + r * hid;
    double* out = packed.data() + r * 2 * hid;
    double* tc = tanh_c->data() + r * hid;
    for (Index j = 0; j < hid; ++j) {
      const double ig = z[j];
      const double fg = z[hid + j];
      const double gc = z[2 * hid + j];
      const double og = z[3 * hid + j];
      const double c2 = fg * cp[j] + ig * gc;
      tc[j] = std::tanh(c2);
      out[hid + j] = c2;
      out[j] = og * tc[j];
    }
  }

  Node* xn = x.node();
  Node* hn = h.node();
  Node* cn = c.node();
  Node* wxn = wx.node();
  Node* whn = wh.node();
  Node* bn = b.node();
  Value pack = g.make(
      std::move(packed), {x, h, c, wx, wh, b},
      [xn, hn, cn, wxn, whn, bn, gates, tanh_c, batch, in_dim, hid](Node& self) {
        const Tensor& dpk = self.grad();
        Tensor dz({batch, 4 * hid});
        for (Index r = 0; r < batch; ++r) {
          const double* z = gates->data() + r * 4 * hid;
          const double* tc = tanh_c->data() + r * hid;
          const double* cp = cn->value().data() + r * hid;
          const double* dh2 = dpk.data() + r * 2 * hid;
          const double* dc2e = dh2 + hid;
          double* dzr = dz.data() + r * 4 * hid;
          double* dcp = cn->needs_grad()
                            ? Graph::grad_buffer(cn).data() + r * hid
                            : nullptr;
          for (Index j = 0; j < hid; ++j) {
            const double ig = z[j];
            const double fg = z[hid + j];
            const double gc = z[2 * hid + j];
            const double og = z[3 * hid + j];
            const double d_o = dh2[j] * tc[j];
            const double dc2 = dc2e[j] + dh2[j] * og * (1.0 - tc[j] * tc[j]);
            const double d_i = dc2 * gc;
            const double d_f = dc2 * cp[j];
            const double d_g = dc2 * ig;
            if (dcp != nullptr) dcp[j] += dc2 * fg;
            dzr[j] = d_i * ig * (1.0 - ig);
            dzr[hid + j] = d_f * fg * (1.0 - fg);
            dzr[2 * hid + j] = d_g * (1.0 - gc * gc);
            dzr[3 * hid + j] = d_o * og * (1.0 - og);
          }
        }
        CMapM dzm(dz.data(), batch, 4 * hid);
        if (xn->needs_grad()) {
          MapM dxm = map2(Graph::grad_buffer(xn), batch, in_dim);
          dxm.noalias() += dzm * cmap2(wxn->value(), 4 * hid, in_dim);
        }
        if (hn->needs_grad()) {
          MapM dhm = map2(Graph::grad_buffer(hn), batch, hid);
          dhm.noalias() += dzm * cmap2(whn->value(), 4 * hid, hid);
        }
        if (wxn->needs_grad()) {
          MapM dwm = map2(Graph::grad_buffer(wxn), 4 * hid, in_dim);
          dwm.noalias() += dzm.transpose() * cmap2(xn->value(), batch, in_dim);
        }
        if (whn->needs_grad()) {
          MapM dwm = map2(Graph::grad_buffer(whn), 4 * hid, hid);
          dwm.noalias() += dzm.transpose() * cmap2(hn->value(), batch, hid);
        }
        if (bn->needs_grad()) {
          MapM dbm = map2(Graph::grad_buffer(bn), 1, 4 * hid);
          dbm.row(0) += dzm.colwise().sum();
        }
      });

  Value h2 = slice_cols(g, pack, 0, hid);
  Value c2 = slice_cols(g, pack, hid, 2 * hid);
  return {h2, c2};
}

}  // namespace numcore
