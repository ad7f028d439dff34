#pragma once

// Kernel bodies shared by every ISA. Included by exactly one translation unit
// per instruction set; V is ScalarD or a SIMD wrapper from vec.hpp.

#include <cstddef>

#include "sfwi/simd/kernels.hpp"
#include "sfwi/simd/vec.hpp"

namespace sfwi::simd::impl {

template <class V>
inline V d1(const double* p, std::ptrdiff_t s, const double* c) {
  V acc = V::set1(c[0]) * (V::load(p + s) - V::load(p - s));
  acc = fma(V::set1(c[1]), V::load(p + 2 * s) - V::load(p - 2 * s), acc);
  acc = fma(V::set1(c[2]), V::load(p + 3 * s) - V::load(p - 3 * s), acc);
  acc = fma(V::set1(c[3]), V::load(p + 4 * s) - V::load(p - 4 * s), acc);
  return acc;
}

template <class V>
inline V d2(const double* p, std::ptrdiff_t s, const double* c) {
  V acc = V::set1(c[0]) * V::load(p);
  acc = fma(V::set1(c[1]), V::load(p + s) + V::load(p - s), acc);
  acc = fma(V::set1(c[2]), V::load(p + 2 * s) + V::load(p - 2 * s), acc);
  acc = fma(V::set1(c[3]), V::load(p + 3 * s) + V::load(p - 3 * s), acc);
  acc = fma(V::set1(c[4]), V::load(p + 4 * s) + V::load(p - 4 * s), acc);
  return acc;
}

// Runs body.template operator()<V>(x) over full vectors and finishes the
// tail with single lanes.
template <class V, class Body>
inline void sweep(int x0, int x1, Body&& body) {
  int x = x0;
  if constexpr (V::width > 1) {
    for (; x + V::width <= x1; x += V::width) body.template operator()<V>(x);
  }
  for (; x < x1; ++x) body.template operator()<ScalarD>(x);
}

template <class V>
struct Kernels {
  static void fwd_psi(const WaveRow& r, const double* u, double* psix, double* psiz, int x0,
                      int x1) {
    sweep<V>(x0, x1, [&]<class W>(int x) {
      const W ux = d1<W>(u + x, 1, r.cx1);
      const W uz = d1<W>(u + x, r.pitch, r.cz1);
      fma(W::load(r.bx + x), ux, W::load(r.ax + x) * W::load(psix + x)).store(psix + x);
      fma(W::set1(r.bz), uz, W::set1(r.az) * W::load(psiz + x)).store(psiz + x);
    });
  }

  static void fwd_pml(const WaveRow& r, const double* u, const double* psix, const double* psiz,
                      double* zetax, double* zetaz, const double* vv, double* uprev_next,
                      double* lap_out, int x0, int x1) {
    sweep<V>(x0, x1, [&]<class W>(int x) {
      const W tx = d2<W>(u + x, 1, r.cx2) + d1<W>(psix + x, 1, r.cx1);
      const W tz = d2<W>(u + x, r.pitch, r.cz2) + d1<W>(psiz + x, r.pitch, r.cz1);
      const W zx = fma(W::load(r.bx + x), tx, W::load(r.ax + x) * W::load(zetax + x));
      const W zz = fma(W::set1(r.bz), tz, W::set1(r.az) * W::load(zetaz + x));
      zx.store(zetax + x);
      zz.store(zetaz + x);
      const W lap = (tx + zx) + (tz + zz);
      lap.store(lap_out + x);
      const W un = fma(W::load(vv + x), lap,
                       W::set1(2.0) * W::load(u + x) - W::load(uprev_next + x));
      un.store(uprev_next + x);
    });
  }

  static void fwd_inner(const WaveRow& r, const double* u, const double* vv, double* uprev_next,
                        double* lap_out, int x0, int x1) {
    sweep<V>(x0, x1, [&]<class W>(int x) {
      const W lap = d2<W>(u + x, 1, r.cx2) + d2<W>(u + x, r.pitch, r.cz2);
      lap.store(lap_out + x);
      const W un = fma(W::load(vv + x), lap,
                       W::set1(2.0) * W::load(u + x) - W::load(uprev_next + x));
      un.store(uprev_next + x);
    });
  }

  static void adj_seed_pml(const WaveRow& r, const double* g, const double* vv, const double* w,
                           const double* lap, double* zbarx, double* zbarz, double* tx,
                           double* tz, double* grad, int x0, int x1) {
    sweep<V>(x0, x1, [&]<class W>(int x) {
      const W gg = W::load(g + x);
      const W lb = W::load(vv + x) * gg;
      fma(W::load(w + x) * W::load(lap + x), gg, W::load(grad + x)).store(grad + x);
      const W ztx = W::load(zbarx + x) + lb;
      const W ztz = W::load(zbarz + x) + lb;
      fma(W::load(r.bx + x), ztx, lb).store(tx + x);
      fma(W::set1(r.bz), ztz, lb).store(tz + x);
      (W::load(r.ax + x) * ztx).store(zbarx + x);
      (W::set1(r.az) * ztz).store(zbarz + x);
    });
  }

  static void adj_seed_inner(const WaveRow&, const double* g, const double* vv, const double* w,
                             const double* lap, double* tx, double* tz, double* grad, int x0,
                             int x1) {
    sweep<V>(x0, x1, [&]<class W>(int x) {
      const W gg = W::load(g + x);
      const W lb = W::load(vv + x) * gg;
      fma(W::load(w + x) * W::load(lap + x), gg, W::load(grad + x)).store(grad + x);
      lb.store(tx + x);
      lb.store(tz + x);
    });
  }

  static void adj_psi(const WaveRow& r, const double* tx, const double* tz, double* pbarx,
                      double* pbarz, double* bpx, double* bpz, int x0, int x1) {
    sweep<V>(x0, x1, [&]<class W>(int x) {
      const W ptx = W::load(pbarx + x) - d1<W>(tx + x, 1, r.cx1);
      const W ptz = W::load(pbarz + x) - d1<W>(tz + x, r.pitch, r.cz1);
      (W::load(r.ax + x) * ptx).store(pbarx + x);
      (W::set1(r.az) * ptz).store(pbarz + x);
      (W::load(r.bx + x) * ptx).store(bpx + x);
      (W::set1(r.bz) * ptz).store(bpz + x);
    });
  }

  static void adj_pml(const WaveRow& r, double* g, const double* tx, const double* tz,
                      const double* bpx, const double* bpz, double* abar, int x0, int x1) {
    sweep<V>(x0, x1, [&]<class W>(int x) {
      const W gg = W::load(g + x);
      const W lapt = d2<W>(tx + x, 1, r.cx2) + d2<W>(tz + x, r.pitch, r.cz2);
      const W psit = d1<W>(bpx + x, 1, r.cx1) + d1<W>(bpz + x, r.pitch, r.cz1);
      (W::load(abar + x) + fma(W::set1(2.0), gg, lapt - psit)).store(abar + x);
      (-gg).store(g + x);
    });
  }

  static void adj_inner(const WaveRow& r, double* g, const double* tx, const double* tz,
                        double* abar, int x0, int x1) {
    sweep<V>(x0, x1, [&]<class W>(int x) {
      const W gg = W::load(g + x);
      const W lapt = d2<W>(tx + x, 1, r.cx2) + d2<W>(tz + x, r.pitch, r.cz2);
      (W::load(abar + x) + fma(W::set1(2.0), gg, lapt)).store(abar + x);
      (-gg).store(g + x);
    });
  }

  static void axpy(std::size_t n, double a, const double* x, double* y) {
    const V va = V::set1(a);
    std::size_t i = 0;
    if constexpr (V::width > 1) {
      for (; i + V::width <= n; i += V::width) fma(va, V::load(x + i), V::load(y + i)).store(y + i);
    }
    for (; i < n; ++i) y[i] += a * x[i];
  }

  static double dot(std::size_t n, const double* x, const double* y) {
    std::size_t i = 0;
    double tail = 0.0;
    if constexpr (V::width > 1) {
      V acc = V::zero();
      for (; i + V::width <= n; i += V::width) acc = fma(V::load(x + i), V::load(y + i), acc);
      tail = acc.hsum();
    }
    for (; i < n; ++i) tail += x[i] * y[i];
    return tail;
  }

  static KernelTable table(std::string_view name) {
    return {name,        fwd_psi, fwd_pml, fwd_inner, adj_seed_pml, adj_seed_inner,
            adj_psi,     adj_pml, adj_inner, axpy,    dot};
  }
};

}  // namespace sfwi::simd::impl
