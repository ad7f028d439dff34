#include "sfwi/ad/ops.hpp"

#include <algorithm>
#include <cmath>

#include "sfwi/simd/kernels.hpp"

namespace sfwi::ad {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

void require_image(const Tensor& x, const char* op) {
  require(x.shape().size() == 3, std::string(op) + ": expected [C,H,W], got " + shape_str(x.shape()));
}

void accumulate(std::span<double> dst, std::span<const double> src) {
  if (dst.empty()) return;
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

struct ConvDims {
  int cin, cout, h, w, k, p, stride, oh, ow;
};

// Stride-1 row range: output columns ox whose input column ox+kx-p is inside [0,w).
inline void col_range(const ConvDims& d, int kx, int& lo, int& hi) {
  lo = std::max(0, d.p - kx);
  hi = std::min(d.ow, d.w + d.p - kx);
}

void conv_forward(const ConvDims& d, const double* x, const double* wt, const double* b,
                  double* y) {
  const auto& kt = simd::kernels();
  const std::size_t plane = static_cast<std::size_t>(d.oh) * d.ow;
  for (int co = 0; co < d.cout; ++co) {
    double* yc = y + co * plane;
    std::fill(yc, yc + plane, b[co]);
    for (int ci = 0; ci < d.cin; ++ci) {
      const double* xc = x + static_cast<std::size_t>(ci) * d.h * d.w;
      const double* wk = wt + (static_cast<std::size_t>(co) * d.cin + ci) * d.k * d.k;
      for (int ky = 0; ky < d.k; ++ky) {
        for (int kx = 0; kx < d.k; ++kx) {
          const double wv = wk[ky * d.k + kx];
          if (d.stride == 1) {
            int lo, hi;
            col_range(d, kx, lo, hi);
            if (hi <= lo) continue;
            for (int oy = 0; oy < d.oh; ++oy) {
              const int iy = oy + ky - d.p;
              if (iy < 0 || iy >= d.h) continue;
              kt.axpy(hi - lo, wv, xc + iy * d.w + lo + kx - d.p, yc + oy * d.ow + lo);
            }
          } else {
            for (int oy = 0; oy < d.oh; ++oy) {
              const int iy = oy * d.stride + ky - d.p;
              if (iy < 0 || iy >= d.h) continue;
              for (int ox = 0; ox < d.ow; ++ox) {
                const int ix = ox * d.stride + kx - d.p;
                if (ix < 0 || ix >= d.w) continue;
                yc[oy * d.ow + ox] += wv * xc[iy * d.w + ix];
              }
            }
          }
        }
      }
    }
  }
}

void conv_backward(const ConvDims& d, const double* x, const double* wt, const double* gy,
                   double* gx, double* gw, double* gb) {
  const auto& kt = simd::kernels();
  const std::size_t plane = static_cast<std::size_t>(d.oh) * d.ow;
  for (int co = 0; co < d.cout; ++co) {
    const double* gyc = gy + co * plane;
    if (gb) {
      double s = 0.0;
      for (std::size_t i = 0; i < plane; ++i) s += gyc[i];
      gb[co] += s;
    }
    for (int ci = 0; ci < d.cin; ++ci) {
      const double* xc = x + static_cast<std::size_t>(ci) * d.h * d.w;
      double* gxc = gx ? gx + static_cast<std::size_t>(ci) * d.h * d.w : nullptr;
      const std::size_t koff = (static_cast<std::size_t>(co) * d.cin + ci) * d.k * d.k;
      for (int ky = 0; ky < d.k; ++ky) {
        for (int kx = 0; kx < d.k; ++kx) {
          const double wv = wt[koff + ky * d.k + kx];
          double acc = 0.0;
          if (d.stride == 1) {
            int lo, hi;
            col_range(d, kx, lo, hi);
            if (hi <= lo) continue;
            for (int oy = 0; oy < d.oh; ++oy) {
              const int iy = oy + ky - d.p;
              if (iy < 0 || iy >= d.h) continue;
              const double* g = gyc + oy * d.ow + lo;
              const std::size_t xo = iy * d.w + lo + kx - d.p;
              if (gw) acc += kt.dot(hi - lo, g, xc + xo);
              if (gxc) kt.axpy(hi - lo, wv, g, gxc + xo);
            }
          } else {
            for (int oy = 0; oy < d.oh; ++oy) {
              const int iy = oy * d.stride + ky - d.p;
              if (iy < 0 || iy >= d.h) continue;
              for (int ox = 0; ox < d.ow; ++ox) {
                const int ix = ox * d.stride + kx - d.p;
                if (ix < 0 || ix >= d.w) continue;
                const double g = gyc[oy * d.ow + ox];
                acc += g * xc[iy * d.w + ix];
                if (gxc) gxc[iy * d.w + ix] += wv * g;
              }
            }
          }
          if (gw) gw[koff + ky * d.k + kx] += acc;
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride) {
  require_image(x, "conv2d");
  const Shape& ws = weight.shape();
  require(ws.size() == 4 && ws[2] == ws[3] && ws[2] % 2 == 1,
          "conv2d: kernel must be [Cout,Cin,K,K] with odd K, got " + shape_str(ws));
  require(ws[1] == x.shape()[0], "conv2d: kernel expects " + std::to_string(ws[1]) +
                                     " input channels, got " + std::to_string(x.shape()[0]));
  require(bias.shape() == Shape{ws[0]}, "conv2d: bias must be [Cout]");
  require(stride == 1 || stride == 2, "conv2d: stride must be 1 or 2");
  ConvDims d{ws[1], ws[0], x.shape()[1], x.shape()[2], ws[2], ws[2] / 2, stride, 0, 0};
  d.oh = (d.h + stride - 1) / stride;
  d.ow = (d.w + stride - 1) / stride;

  std::vector<double> y(static_cast<std::size_t>(d.cout) * d.oh * d.ow);
  conv_forward(d, x.values().data(), weight.values().data(), bias.values().data(), y.data());
  const int xi = x.id(), wi = weight.id(), bi = bias.id();
  return x.tape().record(std::move(y), {d.cout, d.oh, d.ow}, {x, weight, bias},
                         [d, xi, wi, bi](Tape& t, int self) {
                           auto gx = t.grad_sink(xi);
                           auto gw = t.grad_sink(wi);
                           auto gb = t.grad_sink(bi);
                           conv_backward(d, t.value(xi).data(), t.value(wi).data(),
                                         t.grad(self).data(), gx.empty() ? nullptr : gx.data(),
                                         gw.empty() ? nullptr : gw.data(),
                                         gb.empty() ? nullptr : gb.data());
                         });
}

Tensor group_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, int groups,
                  double eps) {
  require_image(x, "group_norm");
  const int c = x.shape()[0];
  const std::size_t hw = static_cast<std::size_t>(x.shape()[1]) * x.shape()[2];
  require(groups > 0 && c % groups == 0, "group_norm: " + std::to_string(c) +
                                             " channels not divisible into " +
                                             std::to_string(groups) + " groups");
  require(gamma.shape() == Shape{c} && beta.shape() == Shape{c}, "group_norm: affine must be [C]");
  const int cpg = c / groups;
  const std::size_t n = cpg * hw;

  auto xv = x.values();
  auto gv = gamma.values();
  auto bv = beta.values();
  std::vector<double> xhat(xv.size());
  std::vector<double> rstd(groups);
  std::vector<double> y(xv.size());
  for (int g = 0; g < groups; ++g) {
    const std::size_t off = g * n;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += xv[off + i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (xv[off + i] - mean) * (xv[off + i] - mean);
    var /= static_cast<double>(n);
    rstd[g] = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < n; ++i) xhat[off + i] = (xv[off + i] - mean) * rstd[g];
  }
  for (int ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < hw; ++i)
      y[ch * hw + i] = gv[ch] * xhat[ch * hw + i] + bv[ch];

  const int xi = x.id(), gi = gamma.id(), bi = beta.id();
  return x.tape().record(
      std::move(y), x.shape(), {x, gamma, beta},
      [=, xhat = std::move(xhat), rstd = std::move(rstd)](Tape& t, int self) {
        auto gy = t.grad(self);
        auto gam = t.value(gi);
        auto ggam = t.grad_sink(gi);
        auto gbet = t.grad_sink(bi);
        for (int ch = 0; ch < c; ++ch) {
          double sg = 0.0, sb = 0.0;
          for (std::size_t i = 0; i < hw; ++i) {
            sg += gy[ch * hw + i] * xhat[ch * hw + i];
            sb += gy[ch * hw + i];
          }
          if (!ggam.empty()) ggam[ch] += sg;
          if (!gbet.empty()) gbet[ch] += sb;
        }
        auto gx = t.grad_sink(xi);
        if (gx.empty()) return;
        std::vector<double> dxh(n);
        for (int g = 0; g < groups; ++g) {
          const std::size_t off = g * n;
          double m1 = 0.0, m2 = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const int ch = static_cast<int>((off + i) / hw);
            dxh[i] = gy[off + i] * gam[ch];
            m1 += dxh[i];
            m2 += dxh[i] * xhat[off + i];
          }
          m1 /= static_cast<double>(n);
          m2 /= static_cast<double>(n);
          for (std::size_t i = 0; i < n; ++i)
            gx[off + i] += rstd[g] * (dxh[i] - m1 - xhat[off + i] * m2);
        }
      });
}

Tensor silu(const Tensor& x) {
  auto xv = x.values();
  std::vector<double> y(xv.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xv[i] / (1.0 + std::exp(-xv[i]));
  const int xi = x.id();
  return x.tape().record(std::move(y), x.shape(), {x}, [xi](Tape& t, int self) {
    auto gx = t.grad_sink(xi);
    auto xv = t.value(xi);
    auto gy = t.grad(self);
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double s = 1.0 / (1.0 + std::exp(-xv[i]));
      gx[i] += gy[i] * s * (1.0 + xv[i] * (1.0 - s));
    }
  });
}

Tensor upsample2x(const Tensor& x) {
  require_image(x, "upsample2x");
  const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  auto xv = x.values();
  std::vector<double> y(static_cast<std::size_t>(c) * 4 * h * w);
  for (int ch = 0; ch < c; ++ch)
    for (int yy = 0; yy < 2 * h; ++yy)
      for (int xx = 0; xx < 2 * w; ++xx)
        y[(ch * 2 * h + yy) * 2 * w + xx] = xv[(ch * h + yy / 2) * w + xx / 2];
  const int xi = x.id();
  return x.tape().record(std::move(y), {c, 2 * h, 2 * w}, {x}, [=](Tape& t, int self) {
    auto gx = t.grad_sink(xi);
    auto gy = t.grad(self);
    for (int ch = 0; ch < c; ++ch)
      for (int yy = 0; yy < 2 * h; ++yy)
        for (int xx = 0; xx < 2 * w; ++xx)
          gx[(ch * h + yy / 2) * w + xx / 2] += gy[(ch * 2 * h + yy) * 2 * w + xx];
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const Shape& ws = weight.shape();
  require(ws.size() == 2, "linear: weight must be [out,in]");
  require(x.shape() == Shape{ws[1]}, "linear: input must be [" + std::to_string(ws[1]) + "]");
  require(bias.shape() == Shape{ws[0]}, "linear: bias must be [out]");
  const int no = ws[0], ni = ws[1];
  auto xv = x.values();
  auto wv = weight.values();
  auto bv = bias.values();
  std::vector<double> y(no);
  for (int o = 0; o < no; ++o) {
    double s = bv[o];
    for (int i = 0; i < ni; ++i) s += wv[o * ni + i] * xv[i];
    y[o] = s;
  }
  const int xi = x.id(), wi = weight.id(), bi = bias.id();
  return x.tape().record(std::move(y), {no}, {x, weight, bias}, [=](Tape& t, int self) {
    auto gy = t.grad(self);
    auto xv = t.value(xi);
    auto wv = t.value(wi);
    auto gx = t.grad_sink(xi);
    auto gw = t.grad_sink(wi);
    auto gb = t.grad_sink(bi);
    for (int o = 0; o < no; ++o) {
      if (!gb.empty()) gb[o] += gy[o];
      for (int i = 0; i < ni; ++i) {
        if (!gw.empty()) gw[o * ni + i] += gy[o] * xv[i];
        if (!gx.empty()) gx[i] += gy[o] * wv[o * ni + i];
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(),
          "add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> y(av.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
  const int ai = a.id(), bi = b.id();
  return a.tape().record(std::move(y), a.shape(), {a, b}, [=](Tape& t, int self) {
    accumulate(t.grad_sink(ai), t.grad(self));
    accumulate(t.grad_sink(bi), t.grad(self));
  });
}

Tensor scale(const Tensor& a, double s) { return affine(a, s, 0.0); }

Tensor affine(const Tensor& a, double s, double c) {
  auto av = a.values();
  std::vector<double> y(av.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * s + c;
  const int ai = a.id();
  return a.tape().record(std::move(y), a.shape(), {a}, [=](Tape& t, int self) {
    auto ga = t.grad_sink(ai);
    auto gy = t.grad(self);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += s * gy[i];
  });
}

Tensor add_channel(const Tensor& x, const Tensor& v) {
  require_image(x, "add_channel");
  const int c = x.shape()[0];
  require(v.shape() == Shape{c}, "add_channel: vector must be [C]");
  const std::size_t hw = static_cast<std::size_t>(x.shape()[1]) * x.shape()[2];
  auto xv = x.values();
  auto vv = v.values();
  std::vector<double> y(xv.size());
  for (int ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < hw; ++i) y[ch * hw + i] = xv[ch * hw + i] + vv[ch];
  const int xi = x.id(), vi = v.id();
  return x.tape().record(std::move(y), x.shape(), {x, v}, [=](Tape& t, int self) {
    auto gy = t.grad(self);
    accumulate(t.grad_sink(xi), gy);
    auto gv = t.grad_sink(vi);
    if (gv.empty()) return;
    for (int ch = 0; ch < c; ++ch) {
      double s = 0.0;
      for (std::size_t i = 0; i < hw; ++i) s += gy[ch * hw + i];
      gv[ch] += s;
    }
  });
}

Tensor concat(const Tensor& a, const Tensor& b) {
  require_image(a, "concat");
  require_image(b, "concat");
  require(a.shape()[1] == b.shape()[1] && a.shape()[2] == b.shape()[2],
          "concat: spatial mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<double> y(a.values().begin(), a.values().end());
  y.insert(y.end(), b.values().begin(), b.values().end());
  const std::size_t na = a.values().size();
  const int ai = a.id(), bi = b.id();
  return a.tape().record(std::move(y), {a.shape()[0] + b.shape()[0], a.shape()[1], a.shape()[2]},
                         {a, b}, [=](Tape& t, int self) {
                           auto gy = t.grad(self);
                           accumulate(t.grad_sink(ai), gy.subspan(0, na));
                           accumulate(t.grad_sink(bi), gy.subspan(na));
                         });
}

Tensor pad(const Tensor& x, int pt, int pb, int pl, int pr) {
  require_image(x, "pad");
  require(pt >= 0 && pb >= 0 && pl >= 0 && pr >= 0, "pad: negative padding");
  const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  const int oh = h + pt + pb, ow = w + pl + pr;
  auto xv = x.values();
  std::vector<double> y(static_cast<std::size_t>(c) * oh * ow, 0.0);
  for (int ch = 0; ch < c; ++ch)
    for (int r = 0; r < h; ++r)
      std::copy_n(xv.data() + (ch * h + r) * w, w, y.data() + (ch * oh + r + pt) * ow + pl);
  const int xi = x.id();
  return x.tape().record(std::move(y), {c, oh, ow}, {x}, [=](Tape& t, int self) {
    auto gx = t.grad_sink(xi);
    auto gy = t.grad(self);
    for (int ch = 0; ch < c; ++ch)
      for (int r = 0; r < h; ++r)
        for (int q = 0; q < w; ++q) gx[(ch * h + r) * w + q] += gy[(ch * oh + r + pt) * ow + q + pl];
  });
}

Tensor crop(const Tensor& x, int top, int left, int h, int w) {
  require_image(x, "crop");
  const int c = x.shape()[0], ih = x.shape()[1], iw = x.shape()[2];
  require(top >= 0 && left >= 0 && h > 0 && w > 0 && top + h <= ih && left + w <= iw,
          "crop: window outside " + shape_str(x.shape()));
  auto xv = x.values();
  std::vector<double> y(static_cast<std::size_t>(c) * h * w);
  for (int ch = 0; ch < c; ++ch)
    for (int r = 0; r < h; ++r)
      std::copy_n(xv.data() + (ch * ih + r + top) * iw + left, w, y.data() + (ch * h + r) * w);
  const int xi = x.id();
  return x.tape().record(std::move(y), {c, h, w}, {x}, [=](Tape& t, int self) {
    auto gx = t.grad_sink(xi);
    auto gy = t.grad(self);
    for (int ch = 0; ch < c; ++ch)
      for (int r = 0; r < h; ++r)
        for (int q = 0; q < w; ++q) gx[(ch * ih + r + top) * iw + q + left] += gy[(ch * h + r) * w + q];
  });
}

}  // namespace sfwi::ad
