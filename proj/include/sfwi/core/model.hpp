#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sfwi/core/errors.hpp"

namespace sfwi {

/// Regular 2D grid. Arrays on it are depth-major: index = z * nx + x.
class Grid2D {
 public:
  Grid2D(int nx, int nz, double dx, double dz);

  int nx() const noexcept { return nx_; }
  int nz() const noexcept { return nz_; }
  double dx() const noexcept { return dx_; }
  double dz() const noexcept { return dz_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(nx_) * nz_; }
  std::size_t index(int z, int x) const noexcept {
    return static_cast<std::size_t>(z) * nx_ + x;
  }
  bool contains(int z, int x) const noexcept {
    return z >= 0 && z < nz_ && x >= 0 && x < nx_;
  }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

 private:
  int nx_;
  int nz_;
  double dx_;
  double dz_;
};

/// Scalar field on a Grid2D. The tag keeps velocity models and gradients
/// from being mixed up at call sites.
template <class Tag>
class GridField {
 public:
  explicit GridField(Grid2D grid, double fill = 0.0) : grid_(grid), values_(grid.size(), fill) {}
  GridField(Grid2D grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw InvalidArgument("field value count does not match grid size");
  }

  const Grid2D& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  std::vector<double>&& take() && { return std::move(values_); }

  double& at(int z, int x) noexcept { return values_[grid_.index(z, x)]; }
  double at(int z, int x) const noexcept { return values_[grid_.index(z, x)]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }

  friend bool operator==(const GridField&, const GridField&) = default;

 private:
  Grid2D grid_;
  std::vector<double> values_;
};

struct VelocityTag {};
struct GradientTag {};

/// Velocity in m/s.
using VelocityModel = GridField<VelocityTag>;
/// dPhi/dm in s/m.
using GradientField = GridField<GradientTag>;

double max_value(const VelocityModel& m);
double min_value(const VelocityModel& m);
bool all_finite(std::span<const double> v);

struct GridPoint {
  int x = 0;
  int z = 0;
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

/// Source and receiver nodes in grid indices. All shots share the receivers.
struct AcquisitionGeometry {
  std::vector<GridPoint> sources;
  std::vector<GridPoint> receivers;

  void validate(const Grid2D& grid) const;
  int n_shots() const noexcept { return static_cast<int>(sources.size()); }
  int n_receivers() const noexcept { return static_cast<int>(receivers.size()); }
};

/// Evenly spaced sources and receivers along a fixed depth row.
AcquisitionGeometry surface_acquisition(const Grid2D& grid, int n_shots, int n_receivers,
                                        int source_depth, int receiver_depth);

/// Pressure traces laid out [shot][receiver][time].
class ShotGather {
 public:
  ShotGather(int n_shots, int n_receivers, int nt, double dt);
  ShotGather(int n_shots, int n_receivers, int nt, double dt, std::vector<double> traces);

  int n_shots() const noexcept { return n_shots_; }
  int n_receivers() const noexcept { return n_receivers_; }
  int nt() const noexcept { return nt_; }
  double dt() const noexcept { return dt_; }

  std::span<const double> trace(int shot, int receiver) const noexcept {
    return {traces_.data() + offset(shot, receiver), static_cast<std::size_t>(nt_)};
  }
  std::span<double> trace(int shot, int receiver) noexcept {
    return {traces_.data() + offset(shot, receiver), static_cast<std::size_t>(nt_)};
  }
  std::span<const double> shot(int s) const noexcept {
    return {traces_.data() + offset(s, 0), static_cast<std::size_t>(n_receivers_) * nt_};
  }
  std::span<double> shot(int s) noexcept {
    return {traces_.data() + offset(s, 0), static_cast<std::size_t>(n_receivers_) * nt_};
  }
  std::span<const double> values() const noexcept { return traces_; }
  std::span<double> values() noexcept { return traces_; }

  bool same_shape(const ShotGather& o) const noexcept {
    return n_shots_ == o.n_shots_ && n_receivers_ == o.n_receivers_ && nt_ == o.nt_;
  }

  friend bool operator==(const ShotGather&, const ShotGather&) = default;

 private:
  std::size_t offset(int s, int r) const noexcept {
    return (static_cast<std::size_t>(s) * n_receivers_ + r) * nt_;
  }
  int n_shots_;
  int n_receivers_;
  int nt_;
  double dt_;
  std::vector<double> traces_;
};

}  // namespace sfwi
