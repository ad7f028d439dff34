#include <cstdlib>
#include <string>

#include "sfwi/core/errors.hpp"
#include "sfwi/simd/kernels.hpp"

namespace sfwi::simd {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
      return avx2_kernels() != nullptr && cpu_has_avx2();
  }
  return false;
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

namespace {

Isa initial_isa() {
  if (const char* env = std::getenv("SFWI_ISA"); env && std::string(env) == "scalar")
    return Isa::Scalar;
  return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

struct Active {
  Isa isa;
  const KernelTable* table;
};

Active& active() {
  static Active a = [] {
    const Isa isa = initial_isa();
    return Active{isa, isa == Isa::Avx2 ? avx2_kernels() : &scalar_kernels()};
  }();
  return a;
}

}  // namespace

const KernelTable& kernels() { return *active().table; }
Isa active_isa() { return active().isa; }

void set_isa(Isa isa) {
  if (!isa_available(isa))
    throw InvalidArgument("instruction set " + std::string(isa_name(isa)) + " not available");
  active() = {isa, isa == Isa::Avx2 ? avx2_kernels() : &scalar_kernels()};
}

}  // namespace sfwi::simd
