#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sfwi/core/model.hpp"
#include "sfwi/core/wavelet.hpp"
#include "sfwi/wave/solver.hpp"

namespace sfwi::test {

inline double rel_err(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

inline std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo = -1.0,
                                         double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("sfwi_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// 32x32 grid at 5 m with one surface shot and four receivers; a 1700 m/s
/// block sits inside a 1500 m/s background.
struct GradientFixture {
  Grid2D grid{32, 32, 5.0, 5.0};
  VelocityModel background{grid, 1500.0};
  VelocityModel block{grid, 1500.0};
  AcquisitionGeometry geom;
  SolverConfig cfg;
  RickerWavelet wavelet;

  GradientFixture() {
    for (int z = 12; z < 20; ++z)
      for (int x = 12; x < 20; ++x) block.at(z, x) = 1700.0;
    geom.sources = {{16, 2}};
    geom.receivers = {{4, 2}, {12, 2}, {20, 2}, {28, 2}};
    cfg.dt = 1e-3;
    cfg.nt = 300;
    cfg.pml_velocity = 1500.0;
    wavelet = make_ricker(25.0, cfg.dt, cfg.nt, 1.5 / 25.0);
  }
};

}  // namespace sfwi::test
