#pragma once

#include "sfwi/core/model.hpp"

namespace sfwi {

/// Separable Gaussian blur with half-sample reflect padding. The kernel is
/// truncated at 4 sigma. sigma_cells == 0 returns the input unchanged.
VelocityModel gaussian_smooth(const VelocityModel& model, double sigma_cells);

/// Depth-only linear ramp: v(z) = v_top + z (v_bottom - v_top) / (nz - 1).
VelocityModel linear_gradient_model(const Grid2D& grid, double v_top, double v_bottom);

}  // namespace sfwi
