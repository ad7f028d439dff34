#pragma once

#include <filesystem>
#include <limits>
#include <vector>

#include "sfwi/core/model.hpp"

namespace sfwi {

/// ||m - m_true|| / ||m_true||.
double rel_l2(const VelocityModel& m, const VelocityModel& m_true);

struct SsimConfig {
  double sigma = 1.5;  // Gaussian window std, cells
  int window = 11;     // odd
  double k1 = 0.01;
  double k2 = 0.03;
  double range = 1.0;  // dynamic range after normalization

  void validate() const;
};

/// Mean SSIM over every fully contained window, computed after min-max
/// normalizing both fields with their shared minimum and maximum.
double ssim(const VelocityModel& m, const VelocityModel& m_true, const SsimConfig& cfg = {});

/// Singular values of the nz x nx value matrix, descending.
std::vector<double> singular_values(const VelocityModel& m);

/// Number of singular values above sigma_max * max(nx,nz) * eta. The default
/// eta is single-precision machine epsilon, matching stored model precision.
int effective_rank(const VelocityModel& m,
                   double eta = std::numeric_limits<float>::epsilon());

struct SpectralReport {
  std::vector<double> k;            // cycles/m, bin centres, DC excluded
  std::vector<double> s_corrupt;    // radially averaged power
  std::vector<double> s_corrected;
  double r_band = 0.0;
  double hf_gain = 0.0;
  double grad_energy_gain = 0.0;
  double p90_grad_gain = 0.0;
};

struct DeblurBands {
  double band_lo = 0.03;   // cycles/m
  double band_hi = 0.10;
  double k_cut = 0.0375;
};

/// Radially averaged power spectra of both fields and the four sharpness
/// ratios (corrected over corrupt). Bins are 1/(N dx) wide with
/// N = max(nx,nz). Rejects bands above the grid Nyquist wavenumber.
SpectralReport deblur_report(const VelocityModel& corrupt, const VelocityModel& corrected,
                             const DeblurBands& bands = {});

/// Table of k, S_corrupt, S_corrected, then a blank line and the ratio row.
void write_spectral_csv(const std::filesystem::path& path, const SpectralReport& r);

}  // namespace sfwi
