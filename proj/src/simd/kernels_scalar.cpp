#include "kernels_impl.hpp"

namespace sfwi::simd {

const KernelTable& scalar_kernels() {
  static const KernelTable table = impl::Kernels<ScalarD>::table("scalar");
  return table;
}

}  // namespace sfwi::simd
