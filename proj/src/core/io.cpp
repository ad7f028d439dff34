#include "sfwi/core/io.hpp"

#include <cstring>
#include <string>
#include <vector>

#include "sfwi/core/binary.hpp"

namespace sfwi {

using binary::Reader;
using binary::Writer;
using binary::check_version;

void save_field(const std::filesystem::path& path, const VelocityModel& model) {
  const Grid2D& g = model.grid();
  Writer w;
  w.magic("SFWI");
  w.put<std::uint32_t>(kFieldVersion);
  w.put<std::uint32_t>(g.nx());
  w.put<std::uint32_t>(g.nz());
  w.put<double>(g.dx());
  w.put<double>(g.dz());
  for (double v : model.values()) w.put<float>(static_cast<float>(v));
  w.flush(path);
}

VelocityModel load_field(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic("SFWI");
  const auto at_version = r.pos();
  check_version(r.get<std::uint32_t>("version"), kFieldVersion, at_version);
  const auto at_dims = r.pos();
  const std::uint64_t nx = r.get<std::uint32_t>("nx");
  const std::uint64_t nz = r.get<std::uint32_t>("nz");
  const double dx = r.get<double>("dx");
  const double dz = r.get<double>("dz");
  if (nx > static_cast<std::uint64_t>(std::numeric_limits<int>::max()) ||
      nz > static_cast<std::uint64_t>(std::numeric_limits<int>::max()))
    throw FormatError("field dimensions overflow", at_dims);
  Grid2D grid = [&] {
    try {
      return Grid2D(static_cast<int>(nx), static_cast<int>(nz), dx, dz);
    } catch (const InvalidArgument& e) {
      throw FormatError(std::string("invalid field header: ") + e.what(), at_dims);
    }
  }();
  return VelocityModel(grid, r.floats(nx * nz, "field values"));
}

void save_gather(const std::filesystem::path& path, const ShotGather& gather) {
  Writer w;
  w.magic("SGTH");
  w.put<std::uint32_t>(kGatherVersion);
  w.put<std::uint32_t>(gather.n_shots());
  w.put<std::uint32_t>(gather.n_receivers());
  w.put<std::uint32_t>(gather.nt());
  w.put<double>(gather.dt());
  for (double v : gather.values()) w.put<float>(static_cast<float>(v));
  w.flush(path);
}

ShotGather load_gather(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic("SGTH");
  const auto at_version = r.pos();
  check_version(r.get<std::uint32_t>("version"), kGatherVersion, at_version);
  const auto at_dims = r.pos();
  const std::uint64_t ns = r.get<std::uint32_t>("n_shots");
  const std::uint64_t nr = r.get<std::uint32_t>("n_receivers");
  const std::uint64_t nt = r.get<std::uint32_t>("nt");
  const double dt = r.get<double>("dt");
  if (ns == 0 || nr == 0 || nt == 0 || ns > (1u << 30) || nr > (1u << 30) || nt > (1u << 30))
    throw FormatError("gather dimensions out of range", at_dims);
  if (!(dt > 0.0)) throw FormatError("gather dt must be positive", at_dims + 12);
  auto values = r.floats(ns * nr * nt, "gather traces");
  return ShotGather(static_cast<int>(ns), static_cast<int>(nr), static_cast<int>(nt), dt,
                    std::move(values));
}

VelocityModel round_to_storage(const VelocityModel& model) {
  VelocityModel out = model;
  for (double& v : out.values()) v = static_cast<float>(v);
  return out;
}

std::uint64_t field_checksum(const VelocityModel& model) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(model.grid().nx()),
                                 static_cast<std::uint32_t>(model.grid().nz())};
  mix(dims, sizeof dims);
  for (double v : model.values()) {
    const float f = static_cast<float>(v);
    mix(&f, sizeof f);
  }
  return h;
}

}  // namespace sfwi
