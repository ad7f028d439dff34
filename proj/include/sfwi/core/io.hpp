#pragma once

#include <filesystem>

#include "sfwi/core/model.hpp"

namespace sfwi {

// Little-endian binary formats.
//
//   field  (.sfwi): "SFWI" u32 version=1, u32 nx, u32 nz, f64 dx, f64 dz,
//                   then nz*nx f32 values, depth-major.
//   gather (.sgth): "SGTH" u32 version=1, u32 n_shots, u32 n_receivers, u32 nt,
//                   f64 dt, then f32 traces in [shot][receiver][time] order.
//
// Values are stored as f32; a save/load round trip is exact for any model
// whose values are representable in single precision.

inline constexpr std::uint32_t kFieldVersion = 1;
inline constexpr std::uint32_t kGatherVersion = 1;

void save_field(const std::filesystem::path& path, const VelocityModel& model);
VelocityModel load_field(const std::filesystem::path& path);

void save_gather(const std::filesystem::path& path, const ShotGather& gather);
ShotGather load_gather(const std::filesystem::path& path);

/// Values rounded through the on-disk precision.
VelocityModel round_to_storage(const VelocityModel& model);

/// FNV-1a over the stored (f32) representation; identifies a field across runs.
std::uint64_t field_checksum(const VelocityModel& model);

}  // namespace sfwi
