#pragma once

#include <cstddef>
#include <string_view>

namespace sfwi::simd {

/// Per-row view of the padded wavefield arrays used by the stencil kernels.
/// All row pointers address cell x = 0 of the current row; neighbours are
/// reached with +-k (x) and +-k*pitch (z). A 4-cell zero halo surrounds the
/// active area, so every stencil read stays in bounds.
struct WaveRow {
  std::ptrdiff_t pitch = 0;
  const double* cx1 = nullptr;  // 4 first-derivative weights, scaled by 1/dx
  const double* cz1 = nullptr;  // 4 first-derivative weights, scaled by 1/dz
  const double* cx2 = nullptr;  // 5 second-derivative weights, scaled by 1/dx^2
  const double* cz2 = nullptr;  // 5 second-derivative weights, scaled by 1/dz^2
  const double* ax = nullptr;   // PML decay per column
  const double* bx = nullptr;   // PML drive per column
  double az = 1.0;              // PML decay, this row
  double bz = 0.0;              // PML drive, this row
};

// Forward time step (leapfrog + convolutional PML):
//   psi'  = a psi + b D1 u
//   t     = D2 u + D1 psi'
//   zeta' = a zeta + b t
//   lap   = tx + zeta_x' + tz + zeta_z'
//   u+    = 2u - u- + vv * lap            (written over u-)
using FwdPsiFn = void (*)(const WaveRow&, const double* u, double* psix, double* psiz, int x0,
                          int x1);
using FwdPmlFn = void (*)(const WaveRow&, const double* u, const double* psix,
                          const double* psiz, double* zetax, double* zetaz, const double* vv,
                          double* uprev_next, double* lap_out, int x0, int x1);
using FwdInnerFn = void (*)(const WaveRow&, const double* u, const double* vv, double* uprev_next,
                            double* lap_out, int x0, int x1);

// Reverse (transpose) of one forward step. g is the adjoint of u+.
//   seed:  lb = vv g; grad += w lap g; Zt = Zbar + lb; t = lb + b Zt; Zbar = a Zt
//   psi:   Pt = Pbar - D1 t; Pbar = a Pt; bp = b Pt
//   final: abar += 2g + D2 tx + D2 tz - D1 bpx - D1 bpz;  g = -g
using AdjSeedPmlFn = void (*)(const WaveRow&, const double* g, const double* vv, const double* w,
                              const double* lap, double* zbarx, double* zbarz, double* tx,
                              double* tz, double* grad, int x0, int x1);
using AdjSeedInnerFn = void (*)(const WaveRow&, const double* g, const double* vv,
                                const double* w, const double* lap, double* tx, double* tz,
                                double* grad, int x0, int x1);
using AdjPsiFn = void (*)(const WaveRow&, const double* tx, const double* tz, double* pbarx,
                          double* pbarz, double* bpx, double* bpz, int x0, int x1);
using AdjPmlFn = void (*)(const WaveRow&, double* g, const double* tx, const double* tz,
                          const double* bpx, const double* bpz, double* abar, int x0, int x1);
using AdjInnerFn = void (*)(const WaveRow&, double* g, const double* tx, const double* tz,
                            double* abar, int x0, int x1);

using AxpyFn = void (*)(std::size_t n, double a, const double* x, double* y);
using DotFn = double (*)(std::size_t n, const double* x, const double* y);

struct KernelTable {
  std::string_view name;
  FwdPsiFn fwd_psi;
  FwdPmlFn fwd_pml;
  FwdInnerFn fwd_inner;
  AdjSeedPmlFn adj_seed_pml;
  AdjSeedInnerFn adj_seed_inner;
  AdjPsiFn adj_psi;
  AdjPmlFn adj_pml;
  AdjInnerFn adj_inner;
  AxpyFn axpy;
  DotFn dot;
};

enum class Isa { Scalar, Avx2 };

const KernelTable& scalar_kernels();
/// Null when the binary was built without AVX2 support.
const KernelTable* avx2_kernels();

bool cpu_has_avx2();
bool isa_available(Isa isa);

/// Kernels in use. Chosen once at startup (best available, or SFWI_ISA=scalar
/// in the environment) and overridable with set_isa.
const KernelTable& kernels();
Isa active_isa();
/// Throws InvalidArgument when the ISA is unavailable on this machine/build.
void set_isa(Isa isa);

std::string_view isa_name(Isa isa);

}  // namespace sfwi::simd
