#include "sfwi/core/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sfwi {

Grid2D::Grid2D(int nx, int nz, double dx, double dz) : nx_(nx), nz_(nz), dx_(dx), dz_(dz) {
  if (nx < 8 || nz < 8)
    throw InvalidArgument("grid needs nx >= 8 and nz >= 8, got " + std::to_string(nx) + "x" +
                          std::to_string(nz));
  if (!(dx > 0.0) || !(dz > 0.0)) throw InvalidArgument("grid spacing must be positive");
}

double max_value(const VelocityModel& m) {
  return *std::max_element(m.values().begin(), m.values().end());
}

double min_value(const VelocityModel& m) {
  return *std::min_element(m.values().begin(), m.values().end());
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void AcquisitionGeometry::validate(const Grid2D& grid) const {
  if (sources.empty()) throw InvalidArgument("acquisition needs at least one source");
  if (receivers.empty()) throw InvalidArgument("acquisition needs at least one receiver");
  for (const auto& p : sources)
    if (!grid.contains(p.z, p.x))
      throw InvalidArgument("source (" + std::to_string(p.x) + "," + std::to_string(p.z) +
                            ") outside grid");
  for (const auto& p : receivers)
    if (!grid.contains(p.z, p.x))
      throw InvalidArgument("receiver (" + std::to_string(p.x) + "," + std::to_string(p.z) +
                            ") outside grid");
}

namespace {

std::vector<int> spread(int n, int lo, int hi) {
  std::vector<int> out(n);
  if (n == 1) {
    out[0] = (lo + hi) / 2;
    return out;
  }
  for (int i = 0; i < n; ++i)
    out[i] = lo + static_cast<int>(std::lround(static_cast<double>(i) * (hi - lo) / (n - 1)));
  return out;
}

}  // namespace

AcquisitionGeometry surface_acquisition(const Grid2D& grid, int n_shots, int n_receivers,
                                        int source_depth, int receiver_depth) {
  if (n_shots < 1 || n_receivers < 1)
    throw InvalidArgument("surface acquisition needs at least one shot and one receiver");
  AcquisitionGeometry g;
  for (int x : spread(n_shots, 0, grid.nx() - 1)) g.sources.push_back({x, source_depth});
  for (int x : spread(n_receivers, 0, grid.nx() - 1)) g.receivers.push_back({x, receiver_depth});
  g.validate(grid);
  return g;
}

ShotGather::ShotGather(int n_shots, int n_receivers, int nt, double dt)
    : ShotGather(n_shots, n_receivers, nt, dt,
                 std::vector<double>(static_cast<std::size_t>(std::max(n_shots, 0)) *
                                     std::max(n_receivers, 0) * std::max(nt, 0))) {}

ShotGather::ShotGather(int n_shots, int n_receivers, int nt, double dt, std::vector<double> traces)
    : n_shots_(n_shots), n_receivers_(n_receivers), nt_(nt), dt_(dt), traces_(std::move(traces)) {
  if (n_shots < 1 || n_receivers < 1 || nt < 1)
    throw InvalidArgument("shot gather dimensions must be positive");
  if (!(dt > 0.0)) throw InvalidArgument("shot gather dt must be positive");
  if (traces_.size() != static_cast<std::size_t>(n_shots) * n_receivers * nt)
    throw InvalidArgument("shot gather trace count does not match dimensions");
}

}  // namespace sfwi
