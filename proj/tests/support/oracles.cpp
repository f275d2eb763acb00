#include "support/oracles.hpp"

#include <cmath>

namespace oracles {
namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tensor ref_affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  const Index batch = x.shape()[0];
  const Index n = x.shape()[1];
  const Index m = w.shape()[0];
  Tensor y({batch, m});
  for (Index i = 0; i < batch; ++i) {
    for (Index j = 0; j < m; ++j) {
      double s = b[j];
      for (Index k = 0; k < n; ++k) s += w[j * n + k] * x[i * n + k];
      y[i * m + j] = s;
    }
  }
  return y;
}

Tensor ref_conv2d(const Tensor& x, const Tensor& k, const Tensor& b) {
  const Index batch = x.shape()[0], ci = x.shape()[1], h = x.shape()[2],
              w = x.shape()[3];
  const Index co = k.shape()[0];
  const Index oh = h / 2 + 1, ow = w / 2 + 1;  // (h + 2*1 - 2)/2 + 1
  Tensor y({batch, co, oh, ow});
  for (Index s = 0; s < batch; ++s)
    for (Index c = 0; c < co; ++c)
      for (Index i = 0; i < oh; ++i)
        for (Index j = 0; j < ow; ++j) {
          double acc = b[c];
          for (Index c2 = 0; c2 < ci; ++c2)
            for (Index kh = 0; kh < 2; ++kh)
              for (Index kw = 0; kw < 2; ++kw) {
                const Index ih = i * 2 - 1 + kh;
                const Index iw = j * 2 - 1 + kw;
                if (ih < 0 || ih >= h || iw < 0 || iw >= w) continue;
                acc += k[((c * ci + c2) * 2 + kh) * 2 + kw] *
                       x[((s * ci + c2) * h + ih) * w + iw];
              }
          y[((s * co + c) * oh + i) * ow + j] = acc;
        }
  return y;
}

Tensor ref_deconv2d(const Tensor& x, const Tensor& k, const Tensor& b,
                    Index out_pad) {
  const Index batch = x.shape()[0], ci = x.shape()[1], ih = x.shape()[2],
              iw = x.shape()[3];
  const Index co = k.shape()[1];
  const Index oh = (ih - 1) * 2 - 2 + 2 + out_pad;
  const Index ow = (iw - 1) * 2 - 2 + 2 + out_pad;
  Tensor y({batch, co, oh, ow});
  for (Index s = 0; s < batch; ++s) {
    for (Index c = 0; c < co; ++c) {
      double* plane = y.data() + (s * co + c) * oh * ow;
      for (Index i = 0; i < oh * ow; ++i) plane[i] = b[c];
    }
    for (Index c2 = 0; c2 < ci; ++c2)
      for (Index i = 0; i < ih; ++i)
        for (Index j = 0; j < iw; ++j) {
          const double v = x[((s * ci + c2) * ih + i) * iw + j];
          for (Index c = 0; c < co; ++c)
            for (Index kh = 0; kh < 2; ++kh)
              for (Index kw = 0; kw < 2; ++kw) {
                const Index yh = i * 2 - 1 + kh;
                const Index yw = j * 2 - 1 + kw;
                if (yh < 0 || yh >= oh || yw < 0 || yw >= ow) continue;
                y[((s * co + c) * oh + yh) * ow + yw] +=
                    v * k[((c2 * co + c) * 2 + kh) * 2 + kw];
              }
        }
  }
  return y;
}

std::pair<Tensor, Tensor> ref_lstm_cell(const Tensor& x, const Tensor& h,
                                        const Tensor& c, const Tensor& wx,
                                        const Tensor& wh, const Tensor& b) {
  const Index batch = x.shape()[0], in = x.shape()[1], hid = h.shape()[1];
  Tensor h2({batch, hid}), c2({batch, hid});
  for (Index r = 0; r < batch; ++r) {
    for (Index j = 0; j < hid; ++j) {
      double z[4];
      for (int gate = 0; gate < 4; ++gate) {
        const Index row = gate * hid + j;
        double s = b[row];
        for (Index t = 0; t < in; ++t) s += wx[row * in + t] * x[r * in + t];
        for (Index t = 0; t < hid; ++t) s += wh[row * hid + t] * h[r * hid + t];
        z[gate] = s;
      }
      const double ig = sig(z[0]), fg = sig(z[1]), gc = std::tanh(z[2]),
                   og = sig(z[3]);
      const double cc = fg * c[r * hid + j] + ig * gc;
      c2[r * hid + j] = cc;
      h2[r * hid + j] = og * std::tanh(cc);
    }
  }
  return {h2, c2};
}

Tensor jvp_affine(const Tensor& x, const Tensor& w, const Tensor& dx,
                  const Tensor& dw, const Tensor& db) {
  Tensor zb(Shape{w.shape()[0]});
  Tensor t1 = ref_affine(dx, w, zb);
  Tensor t2 = ref_affine(x, dw, db);
  t1.add_scaled(t2, 1.0);
  return t1;
}

Tensor jvp_conv2d(const Tensor& x, const Tensor& k, const Tensor& dx,
                  const Tensor& dk, const Tensor& dbias) {
  Tensor zb(Shape{k.shape()[0]});
  Tensor t1 = ref_conv2d(dx, k, zb);
  Tensor t2 = ref_conv2d(x, dk, dbias);
  t1.add_scaled(t2, 1.0);
  return t1;
}

Tensor jvp_deconv2d(const Tensor& x, const Tensor& k, const Tensor& dx,
                    const Tensor& dk, const Tensor& dbias, Index out_pad) {
  Tensor zb(Shape{k.shape()[1]});
  Tensor t1 = ref_deconv2d(dx, k, zb, out_pad);
  Tensor t2 = ref_deconv2d(x, dk, dbias, out_pad);
  t1.add_scaled(t2, 1.0);
  return t1;
}

Tensor jvp_sigmoid(const Tensor& x, const Tensor& dx) {
  Tensor out(x.shape());
  for (Index i = 0; i < x.size(); ++i) {
    const double y = sig(x[i]);
    out[i] = y * (1.0 - y) * dx[i];
  }
  return out;
}

Tensor jvp_tanh(const Tensor& x, const Tensor& dx) {
  Tensor out(x.shape());
  for (Index i = 0; i < x.size(); ++i) {
    const double y = std::tanh(x[i]);
    out[i] = (1.0 - y * y) * dx[i];
  }
  return out;
}

Tensor jvp_relu(const Tensor& x, const Tensor& dx) {
  Tensor out(x.shape());
  for (Index i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? dx[i] : 0.0;
  return out;
}

Tensor jvp_batchnorm_train(const Tensor& x, const Tensor& gamma,
                           const Tensor& dx, const Tensor& dgamma,
                           const Tensor& dbeta, double eps) {
  const Index batch = x.shape()[0], ch = x.shape()[1],
              hw = x.shape()[2] * x.shape()[3];
  const double n = static_cast<double>(batch * hw);
  Tensor out(x.shape());
  for (Index c = 0; c < ch; ++c) {
    double mu = 0.0, dmu = 0.0;
    for (Index s = 0; s < batch; ++s)
      for (Index i = 0; i < hw; ++i) {
        mu += x[(s * ch + c) * hw + i];
        dmu += dx[(s * ch + c) * hw + i];
      }
    mu /= n;
    dmu /= n;
    double var = 0.0, dvar = 0.0;
    for (Index s = 0; s < batch; ++s)
      for (Index i = 0; i < hw; ++i) {
        const double xc = x[(s * ch + c) * hw + i] - mu;
        const double dxc = dx[(s * ch + c) * hw + i] - dmu;
        var += xc * xc;
        dvar += 2.0 * xc * dxc;
      }
    var /= n;
    dvar /= n;
    const double invstd = 1.0 / std::sqrt(var + eps);
    const double dinvstd = -0.5 * invstd * invstd * invstd * dvar;
    for (Index s = 0; s < batch; ++s)
      for (Index i = 0; i < hw; ++i) {
        const Index idx = (s * ch + c) * hw + i;
        const double xc = x[idx] - mu;
        const double dxc = dx[idx] - dmu;
        const double xhat = xc * invstd;
        const double dxhat = dxc * invstd + xc * dinvstd;
        out[idx] = gamma[c] * dxhat + dgamma[c] * xhat + dbeta[c];
      }
  }
  return out;
}

std::pair<Tensor, Tensor> jvp_lstm_cell(const Tensor& x, const Tensor& h,
                                        const Tensor& c, const Tensor& wx,
                                        const Tensor& wh, const Tensor& b,
                                        const Tensor& dx, const Tensor& dh,
                                        const Tensor& dc, const Tensor& dwx,
                                        const Tensor& dwh, const Tensor& dbias) {
  const Index batch = x.shape()[0], in = x.shape()[1], hid = h.shape()[1];
  Tensor dh2({batch, hid}), dc2({batch, hid});
  for (Index r = 0; r < batch; ++r) {
    for (Index j = 0; j < hid; ++j) {
      double z[4], dz[4];
      for (int gate = 0; gate < 4; ++gate) {
        const Index row = gate * hid + j;
        double s = b[row], ds = dbias[row];
        for (Index t = 0; t < in; ++t) {
          s += wx[row * in + t] * x[r * in + t];
          ds += dwx[row * in + t] * x[r * in + t] + wx[row * in + t] * dx[r * in + t];
        }
        for (Index t = 0; t < hid; ++t) {
          s += wh[row * hid + t] * h[r * hid + t];
          ds += dwh[row * hid + t] * h[r * hid + t] +
                wh[row * hid + t] * dh[r * hid + t];
        }
        z[gate] = s;
        dz[gate] = ds;
      }
      const double ig = sig(z[0]), fg = sig(z[1]), gc = std::tanh(z[2]),
                   og = sig(z[3]);
      const double dig = ig * (1 - ig) * dz[0];
      const double dfg = fg * (1 - fg) * dz[1];
      const double dgc = (1 - gc * gc) * dz[2];
      const double dog = og * (1 - og) * dz[3];
      const double cprev = c[r * hid + j];
      const double dcprev = dc[r * hid + j];
      const double cc = fg * cprev + ig * gc;
      const double dcc = dfg * cprev + fg * dcprev + dig * gc + ig * dgc;
      const double tc = std::tanh(cc);
      const double dtc = (1 - tc * tc) * dcc;
      dc2[r * hid + j] = dcc;
      dh2[r * hid + j] = dog * tc + og * dtc;
    }
  }
  return {dh2, dc2};
}

Tensor central_diff(const std::function<double()>& f, Tensor& param,
                    double step) {
  Tensor g(param.shape());
  for (Index i = 0; i < param.size(); ++i) {
    const double saved = param[i];
    param[i] = saved + step;
    const double up = f();
    param[i] = saved - step;
    const double down = f();
    param[i] = saved;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

double max_rel_err(const Tensor& a, const Tensor& b, double floor) {
  double worst = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    const double mag = std::max({std::fabs(a[i]), std::fabs(b[i]), floor});
    worst = std::max(worst, std::fabs(a[i] - b[i]) / mag);
  }
  return worst;
}

}  // namespace oracles
