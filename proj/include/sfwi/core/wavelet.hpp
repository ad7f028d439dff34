#pragma once

#include <vector>

namespace sfwi {

struct RickerWavelet {
  double f0 = 0.0;  // dominant frequency, Hz
  double dt = 0.0;  // s
  int nt = 0;
  double t0 = 0.0;  // peak delay, s
  std::vector<double> samples;
};

/// r(t) = (1 - 2 pi^2 f0^2 tau^2) exp(-pi^2 f0^2 tau^2), tau = t - t0.
double ricker_value(double f0, double t0, double t);

/// Samples r(n dt) for n in [0, nt). Warns on stderr when nt*dt <= 2*t0.
RickerWavelet make_ricker(double f0, double dt, int nt, double t0);

/// Peak delay used when none is configured.
inline double default_ricker_delay(double f0) { return 1.5 / f0; }

/// Copy of `w` with every sample multiplied by `gain`.
RickerWavelet scaled(const RickerWavelet& w, double gain);

}  // namespace sfwi
