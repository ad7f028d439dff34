#include "sfwi/harness/benchmarks.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>

namespace sfwi::harness {

std::string benchmark_name(BenchmarkKind k) {
  switch (k) {
    case BenchmarkKind::TwoLayer: return "two_layer";
    case BenchmarkKind::ThreeLayer: return "three_layer";
    case BenchmarkKind::Lens: return "lens";
    case BenchmarkKind::RandomLayers: return "random_layers";
  }
  return "?";
}

BenchmarkKind parse_benchmark(const std::string& s) {
  std::string k = s;
  std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return std::tolower(c); });
  for (auto kind : {BenchmarkKind::TwoLayer, BenchmarkKind::ThreeLayer, BenchmarkKind::Lens,
                    BenchmarkKind::RandomLayers})
    if (benchmark_name(kind) == k) return kind;
  throw InvalidArgument("unknown benchmark kind '" + s +
                        "' (expected two_layer, three_layer, lens or random_layers)");
}

namespace {

VelocityModel two_layer(const Grid2D& g) {
  VelocityModel m(g, 2000.0);
  for (int z = g.nz() / 2; z < g.nz(); ++z)
    for (int x = 0; x < g.nx(); ++x) m.at(z, x) = 3000.0;
  return m;
}

VelocityModel three_layer(const Grid2D& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dip(-0.08, 0.08);
  const double s1 = dip(rng), s2 = dip(rng);
  const double c = 0.5 * (g.nx() - 1);
  VelocityModel m(g, 1800.0);
  for (int z = 0; z < g.nz(); ++z)
    for (int x = 0; x < g.nx(); ++x) {
      const double z1 = g.nz() / 3.0 + s1 * (x - c);
      const double z2 = 2.0 * g.nz() / 3.0 + s2 * (x - c);
      if (z >= z2)
        m.at(z, x) = 3400.0;
      else if (z >= z1)
        m.at(z, x) = 2600.0;
    }
  return m;
}

VelocityModel lens(const Grid2D& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  const double cz = 0.45 * g.nz() + jitter(rng) * g.nz() / 16.0;
  const double cx = 0.5 * (g.nx() - 1) + jitter(rng) * g.nx() / 16.0;
  const double az = g.nz() / 8.0, ax = g.nx() / 5.0;
  VelocityModel m(g);
  for (int z = 0; z < g.nz(); ++z)
    for (int x = 0; x < g.nx(); ++x) {
      const double r = std::pow((z - cz) / az, 2) + std::pow((x - cx) / ax, 2);
      m.at(z, x) = r <= 1.0 ? 4500.0 : 1800.0 + 1200.0 * z / (g.nz() - 1);
    }
  return m;
}

VelocityModel random_layers(const Grid2D& g, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(5, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = count(rng);
  std::vector<double> depth(n), amp(n), phase(n), vel(n);
  for (int i = 0; i < n; ++i) {
    depth[i] = (i + 0.3 + 0.4 * u(rng)) * g.nz() / n;
    amp[i] = 0.5 * g.nz() / n * u(rng);
    phase[i] = 2.0 * std::numbers::pi * u(rng);
    vel[i] = 1500.0 + 3000.0 * (i + u(rng)) / n;
  }
  const double wavelength = g.nx() * (0.6 + 0.8 * u(rng));
  VelocityModel m(g);
  for (int z = 0; z < g.nz(); ++z)
    for (int x = 0; x < g.nx(); ++x) {
      double v = 1500.0;
      for (int i = 0; i < n; ++i) {
        const double top = depth[i] + amp[i] * std::sin(2.0 * std::numbers::pi * x / wavelength + phase[i]);
        if (z >= top) v = vel[i];
      }
      m.at(z, x) = std::clamp(v, 1500.0, 4500.0);
    }
  return m;
}

}  // namespace

VelocityModel generate_synthetic_benchmark(BenchmarkKind kind, const Grid2D& grid,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  switch (kind) {
    case BenchmarkKind::TwoLayer: return two_layer(grid);
    case BenchmarkKind::ThreeLayer: return three_layer(grid, rng);
    case BenchmarkKind::Lens: return lens(grid, rng);
    case BenchmarkKind::RandomLayers: return random_layers(grid, rng);
  }
  throw InvalidArgument("unknown benchmark kind");
}

}  // namespace sfwi::harness
