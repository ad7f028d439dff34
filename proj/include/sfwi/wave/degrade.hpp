#pragma once

#include <cstdint>

#include "sfwi/core/model.hpp"

namespace sfwi {

/// Adds white Gaussian noise with variance P / 10^(snr_db/10), where P is the
/// mean square of the whole gather. Deterministic for a given seed.
ShotGather add_gaussian_noise(const ShotGather& gather, double snr_db, std::uint64_t seed);

/// 10 log10(P_clean / P_(noisy - clean)).
double measured_snr_db(const ShotGather& clean, const ShotGather& noisy);

/// Keeps n_keep sources at round(i (n-1)/(n_keep-1)); endpoints always kept,
/// n_keep == 1 keeps the middle source.
AcquisitionGeometry subsample_shots(const AcquisitionGeometry& geom, int n_keep);

/// Indices subsample_shots keeps, for slicing gathers consistently.
std::vector<int> subsample_indices(int n_shots, int n_keep);

/// Gather restricted to the listed shots, in the listed order.
ShotGather select_shots(const ShotGather& gather, const std::vector<int>& shots);

}  // namespace sfwi
