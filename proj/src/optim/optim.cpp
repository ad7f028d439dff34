#include "sfwi/optim/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sfwi {

void AdamWConfig::validate() const {
  if (!(lr > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    throw InvalidArgument("AdamW betas must lie in (0,1)");
  if (!(eps > 0.0)) throw InvalidArgument("AdamW eps must be positive");
  if (!(weight_decay >= 0.0)) throw InvalidArgument("weight decay must be >= 0");
}

namespace {

void check_grads(std::span<const double> grads, const std::string& block) {
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!std::isfinite(grads[i]))
      throw NumericError("non-finite gradient in block '" + block + "' at index " +
                         std::to_string(i));
}

void apply(AdamWState& s, std::span<double> p, std::span<const double> g) {
  const AdamWConfig& c = s.cfg;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(s.step));
  const double decay = 1.0 - c.lr * c.weight_decay;
  for (std::size_t i = 0; i < p.size(); ++i) {
    s.m1[i] = c.beta1 * s.m1[i] + (1.0 - c.beta1) * g[i];
    s.m2[i] = c.beta2 * s.m2[i] + (1.0 - c.beta2) * g[i] * g[i];
    const double mh = s.m1[i] / bc1;
    const double vh = s.m2[i] / bc2;
    p[i] = p[i] * decay - c.lr * mh / (std::sqrt(vh) + c.eps);
  }
}

}  // namespace

void adamw_step(AdamWState& state, std::span<double> params, std::span<const double> grads,
                const std::string& block) {
  if (params.size() != grads.size() || state.m1.size() != params.size())
    throw InvalidArgument("AdamW block '" + block + "': parameter, gradient and moment sizes differ");
  check_grads(grads, block);
  ++state.step;
  apply(state, params, grads);
}

void AdamW::step(const std::vector<Block>& blocks) {
  if (states_.empty()) {
    for (const Block& b : blocks) states_.emplace_back(cfg_, b.value.size());
  }
  if (states_.size() != blocks.size())
    throw InvalidArgument("AdamW block count changed between steps");
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const Block& b = blocks[k];
    if (b.value.size() != b.grad.size() || b.value.size() != states_[k].m1.size())
      throw InvalidArgument("AdamW block '" + b.name + "': size mismatch");
    check_grads(b.grad, b.name);
  }
  ++steps_;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    states_[k].step = steps_;
    apply(states_[k], blocks[k].value, blocks[k].grad);
  }
}

void Bounds::validate() const {
  if (!(c_min > 0.0)) throw InvalidArgument("c_min must be positive");
  if (c_max && !(*c_max > c_min)) throw InvalidArgument("c_max must exceed c_min");
}

void project_bounds(std::span<double> values, const Bounds& bounds) {
  bounds.validate();
  const double hi = bounds.c_max.value_or(std::numeric_limits<double>::infinity());
  for (double& v : values) v = std::clamp(v, bounds.c_min, hi);
}

VelocityModel project_bounds(const VelocityModel& model, const Bounds& bounds) {
  std::vector<double> v(model.values().begin(), model.values().end());
  project_bounds(v, bounds);
  return VelocityModel(model.grid(), std::move(v));
}

TvResult tv_value_and_grad(const VelocityModel& model, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("TV epsilon must be positive");
  const Grid2D& g = model.grid();
  const int nx = g.nx(), nz = g.nz();
  const double e2 = epsilon * epsilon;
  auto m = model.values();
  std::vector<double> grad(m.size(), 0.0);
  double value = 0.0;
  for (int z = 0; z < nz; ++z) {
    for (int x = 0; x < nx; ++x) {
      const std::size_t i = g.index(z, x);
      const double gx = x + 1 < nx ? (m[i + 1] - m[i]) / g.dx() : 0.0;
      const double gz = z + 1 < nz ? (m[i + nx] - m[i]) / g.dz() : 0.0;
      const double r = std::sqrt(gx * gx + gz * gz + e2);
      value += r;
      if (x + 1 < nx) {
        const double c = gx / (r * g.dx());
        grad[i + 1] += c;
        grad[i] -= c;
      }
      if (z + 1 < nz) {
        const double c = gz / (r * g.dz());
        grad[i + nx] += c;
        grad[i] -= c;
      }
    }
  }
  return {value, GradientField(g, std::move(grad))};
}

}  // namespace sfwi
