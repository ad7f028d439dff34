#include "sfwi/core/initial_models.hpp"

#include <cmath>
#include <vector>

namespace sfwi {

namespace {

// Half-sample symmetric reflection: (d c b a | a b c d | d c b a), valid for
// any offset by folding with period 2n.
int reflect_index(int i, int n) {
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

std::vector<double> gaussian_taps(double sigma) {
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    taps[k + radius] = std::exp(-0.5 * (k * k) / (sigma * sigma));
    sum += taps[k + radius];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Each output is written as centre + sum w_k (v_k - centre) so that constant
// regions pass through bit-exactly.
void blur_lines(std::vector<double>& data, int n_lines, int length, std::ptrdiff_t line_stride,
                std::ptrdiff_t elem_stride, const std::vector<double>& taps) {
  const int radius = static_cast<int>(taps.size() / 2);
  std::vector<double> line(length);
  for (int l = 0; l < n_lines; ++l) {
    double* base = data.data() + l * line_stride;
    for (int i = 0; i < length; ++i) line[i] = base[i * elem_stride];
    for (int i = 0; i < length; ++i) {
      const double centre = line[i];
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k)
        acc += taps[k + radius] * (line[reflect_index(i + k, length)] - centre);
      base[i * elem_stride] = centre + acc;
    }
  }
}

}  // namespace

VelocityModel gaussian_smooth(const VelocityModel& model, double sigma_cells) {
  if (sigma_cells < 0.0 || std::isnan(sigma_cells))
    throw InvalidArgument("gaussian_smooth: sigma must be non-negative");
  if (sigma_cells == 0.0) return model;

  const Grid2D& g = model.grid();
  const auto taps = gaussian_taps(sigma_cells);
  std::vector<double> data(model.values().begin(), model.values().end());
  blur_lines(data, g.nz(), g.nx(), g.nx(), 1, taps);  // along x
  blur_lines(data, g.nx(), g.nz(), 1, g.nx(), taps);  // along z
  return VelocityModel(g, std::move(data));
}

VelocityModel linear_gradient_model(const Grid2D& grid, double v_top, double v_bottom) {
  if (!(v_top > 0.0) || !(v_bottom > 0.0))
    throw InvalidArgument("linear_gradient_model: velocities must be positive");
  VelocityModel m(grid);
  const double step = (v_bottom - v_top) / (grid.nz() - 1);
  for (int z = 0; z < grid.nz(); ++z) {
    const double v = v_top + z * step;
    for (int x = 0; x < grid.nx(); ++x) m.at(z, x) = v;
  }
  return m;
}

}  // namespace sfwi
