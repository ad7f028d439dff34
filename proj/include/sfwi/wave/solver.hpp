#pragma once

#include <cstddef>

#include "sfwi/core/model.hpp"
#include "sfwi/core/wavelet.hpp"

namespace sfwi {

/// Constant-density acoustic modelling: 2nd order in time, 8th order in
/// space, convolutional PML on all four sides (no free surface).
struct SolverConfig {
  static constexpr int spatial_order = 8;
  static constexpr int time_order = 2;

  double dt = 1.0e-3;             // s
  int nt = 600;
  int pml_width = 12;             // cells, >= 8
  double pml_reflection = 1.0e-3; // target reflection coefficient at normal incidence
  double pml_velocity = 0.0;      // m/s for the damping profile; <= 0 uses the model maximum
  double pml_frequency = 0.0;     // Hz for the frequency-shift term; <= 0 uses the wavelet f0
  double rho0 = 1000.0;           // kg/m^3; constant density drops out of the update
  double cfl_safety = 0.9;
  int checkpoint_interval = 0;    // 0 keeps every time step for the reverse pass
  std::size_t max_storage_bytes = std::size_t{4} << 30;
  int threads = 1;                // shots simulated concurrently

  void validate() const;
};

/// Sum of the absolute second-derivative weights, halved and square-rooted:
/// dt <= min(dx,dz) / (v_max * C) is the leapfrog stability limit.
double stencil_stability_constant();

/// Largest dt honouring cfl_safety for the given grid and peak velocity.
double max_stable_dt(const Grid2D& grid, double v_max, double cfl_safety);

/// Throws StabilityError (carrying the required dt) when cfg.dt is too large.
void check_cfl(const Grid2D& grid, double v_max, const SolverConfig& cfg);

/// Pressure at every receiver node, one sample per time step.
ShotGather simulate_shots(const VelocityModel& model, const AcquisitionGeometry& geom,
                          const RickerWavelet& wavelet, const SolverConfig& cfg);

/// 0.5 * sum of squared residuals over all shots, receivers and samples.
/// No dt or trace-count weighting.
double data_misfit(const ShotGather& d_syn, const ShotGather& d_obs);

struct MisfitGradient {
  double misfit;
  GradientField grad;
};

/// Misfit of simulate_shots(model) against d_obs and its exact derivative
/// with respect to every velocity cell, by reverse differentiation of the
/// discrete time loop.
MisfitGradient model_gradient(const VelocityModel& model, const AcquisitionGeometry& geom,
                              const RickerWavelet& wavelet, const ShotGather& d_obs,
                              const SolverConfig& cfg);

/// Bytes of forward history one shot keeps for the reverse pass.
std::size_t wavefield_storage_bytes(const Grid2D& grid, const SolverConfig& cfg);

}  // namespace sfwi
