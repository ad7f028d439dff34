// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "kernels_impl.hpp"

namespace sfwi::simd {

const KernelTable* avx2_kernels() {
  static const KernelTable table = impl::Kernels<Avx2D>::table("avx2");
  return &table;
}

}  // namespace sfwi::simd
