#include "sfwi/core/wavelet.hpp"

#include <cmath>
#include <iostream>
#include <numbers>

#include "sfwi/core/errors.hpp"

namespace sfwi {

double ricker_value(double f0, double t0, double t) {
  const double a = std::numbers::pi * f0 * (t - t0);
  const double a2 = a * a;
  return (1.0 - 2.0 * a2) * std::exp(-a2);
}

RickerWavelet make_ricker(double f0, double dt, int nt, double t0) {
  if (!(f0 > 0.0)) throw InvalidArgument("ricker: f0 must be positive");
  if (!(dt > 0.0)) throw InvalidArgument("ricker: dt must be positive");
  if (nt <= 0) throw InvalidArgument("ricker: nt must be positive");
  if (nt * dt <= 2.0 * t0)
    std::cerr << "warning: ricker record length " << nt * dt << " s is shorter than 2*t0 = "
              << 2.0 * t0 << " s; wavelet will be truncated\n";

  RickerWavelet w{f0, dt, nt, t0, std::vector<double>(nt)};
  for (int n = 0; n < nt; ++n) w.samples[n] = ricker_value(f0, t0, n * dt);
  return w;
}

RickerWavelet scaled(const RickerWavelet& w, double gain) {
  RickerWavelet out = w;
  for (double& s : out.samples) s *= gain;
  return out;
}

}  // namespace sfwi
