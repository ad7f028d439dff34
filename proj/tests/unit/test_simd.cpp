#include <doctest.h>

#include <array>
#include <cmath>

#include "sfwi/simd/kernels.hpp"
#include "sfwi/wave/solver.hpp"
#include "support.hpp"

using namespace sfwi;
using simd::Isa;
using simd::KernelTable;

namespace {

// Random padded arrays with a 4-cell halo; a 37-wide row exercises the
// vector body and the scalar tail.
struct Arena {
  static constexpr int W = 37, H = 9, pitch = W + 8;
  std::vector<std::vector<double>> bufs;
  std::array<double, 4> c1x{}, c1z{};
  std::array<double, 5> c2x{}, c2z{};
  std::vector<double> ax, bx;
  simd::WaveRow row;

  explicit Arena(std::uint64_t seed, int nbuf) {
    for (int i = 0; i < nbuf; ++i)
      bufs.push_back(test::random_values(static_cast<std::size_t>(H + 8) * pitch, seed + i));
    auto c = test::random_values(18, seed + 100);
    std::copy_n(c.begin(), 4, c1x.begin());
    std::copy_n(c.begin() + 4, 4, c1z.begin());
    std::copy_n(c.begin() + 8, 5, c2x.begin());
    std::copy_n(c.begin() + 13, 5, c2z.begin());
    ax = test::random_values(pitch, seed + 200, 0.5, 1.0);
    bx = test::random_values(pitch, seed + 201, -0.5, 0.0);
    row.pitch = pitch;
    row.cx1 = c1x.data();
    row.cz1 = c1z.data();
    row.cx2 = c2x.data();
    row.cz2 = c2z.data();
    row.ax = ax.data() + 4;
    row.bx = bx.data() + 4;
    row.az = 0.8;
    row.bz = -0.3;
  }
  double* at(int b) { return bufs[b].data() + (H / 2 + 4) * pitch + 4; }
};

void expect_close(const Arena& a, const Arena& b) {
  for (std::size_t k = 0; k < a.bufs.size(); ++k)
    for (std::size_t i = 0; i < a.bufs[k].size(); ++i)
      REQUIRE(std::abs(a.bufs[k][i] - b.bufs[k][i]) <= 1e-12 * (1.0 + std::abs(a.bufs[k][i])));
}

template <class Call>
void compare(int nbuf, Call&& call) {
  const KernelTable* avx = simd::avx2_kernels();
  if (!avx || !simd::isa_available(Isa::Avx2)) return;
  Arena ref(42, nbuf), vec(42, nbuf);
  call(simd::scalar_kernels(), ref);
  call(*avx, vec);
  expect_close(ref, vec);
}

}  // namespace

TEST_CASE("avx2 kernels match scalar reference") {
  const int W = Arena::W;
  SUBCASE("fwd_psi") {
    compare(3, [&](const KernelTable& k, Arena& a) { k.fwd_psi(a.row, a.at(0), a.at(1), a.at(2), 0, W); });
  }
  SUBCASE("fwd_pml") {
    compare(8, [&](const KernelTable& k, Arena& a) {
      k.fwd_pml(a.row, a.at(0), a.at(1), a.at(2), a.at(3), a.at(4), a.at(5), a.at(6), a.at(7), 0, W);
    });
  }
  SUBCASE("fwd_inner") {
    compare(4, [&](const KernelTable& k, Arena& a) {
      k.fwd_inner(a.row, a.at(0), a.at(1), a.at(2), a.at(3), 0, W);
    });
  }
  SUBCASE("adj_seed_pml") {
    compare(9, [&](const KernelTable& k, Arena& a) {
      k.adj_seed_pml(a.row, a.at(0), a.at(1), a.at(2), a.at(3), a.at(4), a.at(5), a.at(6), a.at(7),
                     a.at(8), 0, W);
    });
  }
  SUBCASE("adj_seed_inner") {
    compare(7, [&](const KernelTable& k, Arena& a) {
      k.adj_seed_inner(a.row, a.at(0), a.at(1), a.at(2), a.at(3), a.at(4), a.at(5), a.at(6), 0, W);
    });
  }
  SUBCASE("adj_psi") {
    compare(6, [&](const KernelTable& k, Arena& a) {
      k.adj_psi(a.row, a.at(0), a.at(1), a.at(2), a.at(3), a.at(4), a.at(5), 0, W);
    });
  }
  SUBCASE("adj_pml") {
    compare(6, [&](const KernelTable& k, Arena& a) {
      k.adj_pml(a.row, a.at(0), a.at(1), a.at(2), a.at(3), a.at(4), a.at(5), 0, W);
    });
  }
  SUBCASE("adj_inner") {
    compare(4, [&](const KernelTable& k, Arena& a) {
      k.adj_inner(a.row, a.at(0), a.at(1), a.at(2), a.at(3), 0, W);
    });
  }
  SUBCASE("axpy") {
    compare(2, [&](const KernelTable& k, Arena& a) { k.axpy(W, 0.7, a.at(0), a.at(1)); });
  }
  SUBCASE("dot") {
    const KernelTable* avx = simd::avx2_kernels();
    if (avx && simd::isa_available(Isa::Avx2)) {
      Arena a(7, 2);
      const double s = simd::scalar_kernels().dot(W, a.at(0), a.at(1));
      const double v = avx->dot(W, a.at(0), a.at(1));
      CHECK(std::abs(s - v) <= 1e-12 * (1.0 + std::abs(s)));
    }
  }
}

TEST_CASE("isa selection") {
  CHECK(simd::isa_available(Isa::Scalar));
  const Isa before = simd::active_isa();
  simd::set_isa(Isa::Scalar);
  CHECK(simd::active_isa() == Isa::Scalar);
  CHECK(simd::kernels().name == simd::scalar_kernels().name);
  if (!simd::isa_available(Isa::Avx2)) CHECK_THROWS_AS(simd::set_isa(Isa::Avx2), InvalidArgument);
  simd::set_isa(before);
}

TEST_CASE("solver output agrees across instruction sets") {
  if (!simd::isa_available(Isa::Avx2)) return;
  test::GradientFixture f;
  ShotGather obs = simulate_shots(f.block, f.geom, f.wavelet, f.cfg);
  const Isa before = simd::active_isa();

  simd::set_isa(Isa::Scalar);
  const ShotGather ds = simulate_shots(f.background, f.geom, f.wavelet, f.cfg);
  const MisfitGradient gs = model_gradient(f.background, f.geom, f.wavelet, obs, f.cfg);
  simd::set_isa(Isa::Avx2);
  const ShotGather dv = simulate_shots(f.background, f.geom, f.wavelet, f.cfg);
  const MisfitGradient gv = model_gradient(f.background, f.geom, f.wavelet, obs, f.cfg);
  simd::set_isa(before);

  double peak = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < ds.values().size(); ++i) {
    peak = std::max(peak, std::abs(ds.values()[i]));
    diff = std::max(diff, std::abs(ds.values()[i] - dv.values()[i]));
  }
  CHECK(diff <= 1e-10 * peak);
  CHECK(test::rel_err(gs.misfit, gv.misfit) < 1e-10);
  double gpeak = 0.0, gdiff = 0.0;
  for (std::size_t i = 0; i < gs.grad.size(); ++i) {
    gpeak = std::max(gpeak, std::abs(gs.grad[i]));
    gdiff = std::max(gdiff, std::abs(gs.grad[i] - gv.grad[i]));
  }
  CHECK(gdiff <= 1e-9 * gpeak);
}
