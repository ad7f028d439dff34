#include "sfwi/wave/degrade.hpp"

#include <cmath>
#include <random>
#include <string>

namespace sfwi {

ShotGather add_gaussian_noise(const ShotGather& gather, double snr_db, std::uint64_t seed) {
  const auto v = gather.values();
  double power = 0.0;
  for (double x : v) power += x * x;
  power /= static_cast<double>(v.size());

  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  ShotGather out = gather;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& x : out.values()) x += sigma * normal(rng);
  return out;
}

double measured_snr_db(const ShotGather& clean, const ShotGather& noisy) {
  if (!clean.same_shape(noisy)) throw InvalidArgument("measured_snr_db: gather shapes differ");
  double ps = 0.0, pn = 0.0;
  const auto a = clean.values();
  const auto b = noisy.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    ps += a[i] * a[i];
    pn += (b[i] - a[i]) * (b[i] - a[i]);
  }
  return 10.0 * std::log10(ps / pn);
}

std::vector<int> subsample_indices(int n_shots, int n_keep) {
  if (n_keep < 1 || n_keep > n_shots)
    throw InvalidArgument("subsample_shots: n_keep " + std::to_string(n_keep) +
                          " outside [1, " + std::to_string(n_shots) + "]");
  if (n_keep == 1) return {(n_shots - 1) / 2};
  std::vector<int> idx(n_keep);
  for (int i = 0; i < n_keep; ++i)
    idx[i] = static_cast<int>(std::lround(static_cast<double>(i) * (n_shots - 1) / (n_keep - 1)));
  return idx;
}

AcquisitionGeometry subsample_shots(const AcquisitionGeometry& geom, int n_keep) {
  AcquisitionGeometry out;
  out.receivers = geom.receivers;
  for (int i : subsample_indices(geom.n_shots(), n_keep)) out.sources.push_back(geom.sources[i]);
  return out;
}

ShotGather select_shots(const ShotGather& gather, const std::vector<int>& shots) {
  ShotGather out(static_cast<int>(shots.size()), gather.n_receivers(), gather.nt(), gather.dt());
  for (std::size_t i = 0; i < shots.size(); ++i) {
    if (shots[i] < 0 || shots[i] >= gather.n_shots())
      throw InvalidArgument("select_shots: shot index out of range");
    const auto src = gather.shot(shots[i]);
    std::copy(src.begin(), src.end(), out.shot(static_cast<int>(i)).begin());
  }
  return out;
}

}  // namespace sfwi
