#pragma once

#include <cstdint>
#include <string>

#include "sfwi/core/model.hpp"

namespace sfwi::harness {

enum class BenchmarkKind { TwoLayer, ThreeLayer, Lens, RandomLayers };

std::string benchmark_name(BenchmarkKind k);
/// two_layer, three_layer, lens, random_layers.
BenchmarkKind parse_benchmark(const std::string& s);

/// Synthetic stand-ins for the field benchmarks. Values stay in
/// [1500, 4500] m/s and depend only on (kind, grid, seed).
///   two_layer      2000 over 3000, flat interface at nz/2
///   three_layer    1800/2600/3400 with gently dipping interfaces
///   lens           1800..3000 depth ramp with a 4500 m/s ellipse
///   random_layers  5..8 undulating layers, velocity increasing with depth
VelocityModel generate_synthetic_benchmark(BenchmarkKind kind, const Grid2D& grid,
                                           std::uint64_t seed);

}  // namespace sfwi::harness
