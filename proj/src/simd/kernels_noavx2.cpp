#include "sfwi/simd/kernels.hpp"

namespace sfwi::simd {

const KernelTable* avx2_kernels() { return nullptr; }

}  // namespace sfwi::simd
