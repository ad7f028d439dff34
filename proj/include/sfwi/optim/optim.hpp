#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfwi/core/model.hpp"

namespace sfwi {

struct AdamWConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;

  void validate() const;
};

/// Moment buffers for one parameter block.
struct AdamWState {
  AdamWConfig cfg;
  long step = 0;
  std::vector<double> m1;
  std::vector<double> m2;

  AdamWState() = default;
  AdamWState(AdamWConfig c, std::size_t n) : cfg(c), m1(n, 0.0), m2(n, 0.0) { cfg.validate(); }
};

/// One bias-corrected AdamW step with decoupled weight decay:
///   p <- p (1 - lr wd);  p <- p - lr mhat / (sqrt(vhat) + eps).
/// Throws NumericError naming `block` when a gradient entry is not finite.
void adamw_step(AdamWState& state, std::span<double> params, std::span<const double> grads,
                const std::string& block = "params");

/// AdamW over several named blocks sharing one step counter.
class AdamW {
 public:
  struct Block {
    std::string name;
    std::span<double> value;
    std::span<const double> grad;
  };

  explicit AdamW(AdamWConfig cfg) : cfg_(cfg) { cfg_.validate(); }
  /// Every gradient is checked before any block is touched.
  void step(const std::vector<Block>& blocks);
  long steps() const noexcept { return steps_; }
  const AdamWConfig& config() const noexcept { return cfg_; }

 private:
  AdamWConfig cfg_;
  long steps_ = 0;
  std::vector<AdamWState> states_;
};

struct Bounds {
  double c_min = 1000.0;
  std::optional<double> c_max;

  void validate() const;
};

/// Elementwise clamp onto [c_min, c_max].
void project_bounds(std::span<double> values, const Bounds& bounds);
VelocityModel project_bounds(const VelocityModel& model, const Bounds& bounds);

struct TvResult {
  double value;
  GradientField grad;
};

/// Smoothed isotropic total variation
///   sum over cells of sqrt(dx_m^2 + dz_m^2 + eps^2),
/// forward differences divided by the spacing, zero difference past the last
/// column/row.
TvResult tv_value_and_grad(const VelocityModel& model, double epsilon = 1e-3);

}  // namespace sfwi
