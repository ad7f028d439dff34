#pragma once

// Thin value wrappers over one lane (ScalarD) or one AVX2 register (Avx2D).
// Kernels are written once against this interface and instantiated per ISA.

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#endif

namespace sfwi::simd {

struct ScalarD {
  static constexpr int width = 1;
  double v;

  static ScalarD load(const double* p) { return {*p}; }
  static ScalarD set1(double x) { return {x}; }
  static ScalarD zero() { return {0.0}; }
  void store(double* p) const { *p = v; }

  friend ScalarD operator+(ScalarD a, ScalarD b) { return {a.v + b.v}; }
  friend ScalarD operator-(ScalarD a, ScalarD b) { return {a.v - b.v}; }
  friend ScalarD operator*(ScalarD a, ScalarD b) { return {a.v * b.v}; }
  friend ScalarD operator-(ScalarD a) { return {-a.v}; }
  /// a * b + c
  friend ScalarD fma(ScalarD a, ScalarD b, ScalarD c) { return {a.v * b.v + c.v}; }
};

#if defined(__AVX2__) && defined(__FMA__)
struct Avx2D {
  static constexpr int width = 4;
  __m256d v;

  static Avx2D load(const double* p) { return {_mm256_loadu_pd(p)}; }
  static Avx2D set1(double x) { return {_mm256_set1_pd(x)}; }
  static Avx2D zero() { return {_mm256_setzero_pd()}; }
  void store(double* p) const { _mm256_storeu_pd(p, v); }

  friend Avx2D operator+(Avx2D a, Avx2D b) { return {_mm256_add_pd(a.v, b.v)}; }
  friend Avx2D operator-(Avx2D a, Avx2D b) { return {_mm256_sub_pd(a.v, b.v)}; }
  friend Avx2D operator*(Avx2D a, Avx2D b) { return {_mm256_mul_pd(a.v, b.v)}; }
  friend Avx2D operator-(Avx2D a) { return {_mm256_xor_pd(a.v, _mm256_set1_pd(-0.0))}; }
  friend Avx2D fma(Avx2D a, Avx2D b, Avx2D c) { return {_mm256_fmadd_pd(a.v, b.v, c.v)}; }

  double hsum() const {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
  }
};
#endif

}  // namespace sfwi::simd
