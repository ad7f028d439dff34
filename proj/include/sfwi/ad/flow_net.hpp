#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sfwi/ad/ops.hpp"

namespace sfwi::ad {

/// Sinusoidal embedding: sin(t*M*w_i) for i < dim/2, cos(t*M*w_{i-dim/2})
/// otherwise, with w_i = 10000^(-2i/dim) and M the time multiplier.
std::vector<double> time_embed(double t, int dim, double multiplier = 1000.0);

/// Everything that fixes parameter shapes and the forward graph.
struct Architecture {
  int base_channels = 16;
  std::vector<int> multipliers{1, 2, 2};
  int res_blocks = 2;
  int groups = 8;
  double time_multiplier = 1000.0;
  /// Input is fed as (m - input_offset) / input_scale.
  double input_offset = 0.0;
  double input_scale = 1000.0;
  /// Raw network output is multiplied by output_scale, then output_offset is added.
  double output_scale = 1000.0;
  double output_offset = 0.0;
  /// Zero-pad symmetrically to a multiple of 2^(levels-1); otherwise reject.
  bool pad_input = true;

  int levels() const { return static_cast<int>(multipliers.size()); }
  int divisor() const { return 1 << (levels() - 1); }
  int time_dim() const { return base_channels; }
  void validate() const;
  bool operator==(const Architecture&) const = default;
};

/// Time-conditioned convolutional U-Net v(m, t) mapping a [nz,nx] field to a
/// field of the same shape. With the final convolution zero-initialised the
/// output is identically zero until trained.
class FlowNetwork {
 public:
  FlowNetwork(Architecture arch, std::uint64_t seed);

  const Architecture& arch() const noexcept { return arch_; }
  std::vector<Parameter>& params() noexcept { return params_; }
  const std::vector<Parameter>& params() const noexcept { return params_; }
  std::size_t parameter_count() const;
  const Parameter& param(const std::string& name) const;

  /// Records the forward pass on `tape`. Output shape is [1,nz,nx] in the
  /// physical units set by output_scale/output_offset.
  Tensor forward(Tape& tape, std::span<const double> field, int nz, int nx, double t);
  /// Output values of a fresh forward pass.
  std::vector<double> evaluate(std::span<const double> field, int nz, int nx, double t);

  void zero_grad();
  /// All parameters finite.
  bool finite() const;

  /// "SFNP" checkpoint: descriptor plus float32 payload.
  void save(const std::filesystem::path& path) const;
  static FlowNetwork load(const std::filesystem::path& path);

 private:
  // Indices into params_, so copies stay self-consistent. -1 marks "absent".
  struct Conv { int w = -1, b = -1; };
  struct Norm { int g = -1, b = -1; };
  struct Res {
    Norm n1; Conv c1; int tw = -1, tb = -1; Norm n2; Conv c2; Conv skip;
  };

  int add_param(const std::string& name, Shape shape, int fan_in);
  Conv make_conv(const std::string& name, int cin, int cout, int k);
  Norm make_norm(const std::string& name, int c);
  Res make_res(const std::string& name, int cin, int cout);
  void build();
  void initialize(std::uint64_t seed);

  Tensor p(Tape& tape, int idx) { return tape.parameter(params_[idx]); }
  Tensor conv(Tape& tape, const Conv& c, const Tensor& x, int stride = 1);
  Tensor norm_act(Tape& tape, const Norm& n, const Tensor& x);
  Tensor res(Tape& tape, const Res& r, const Tensor& x, const Tensor& temb);

  Architecture arch_;
  std::vector<Parameter> params_;
  std::vector<int> fan_in_;  // 0 leaves the parameter at its constant init
  int t1w_ = -1, t1b_ = -1, t2w_ = -1, t2b_ = -1;
  Conv conv_in_;
  std::vector<std::vector<Res>> down_;
  std::vector<Conv> downsample_;
  Res mid1_, mid2_;
  std::vector<std::vector<Res>> up_;
  std::vector<Conv> upsample_;
  Norm out_norm_;
  Conv conv_out_;
};

/// Callable standing in for a trained field map: (field, t) -> field.
using FieldMap = std::function<std::vector<double>(std::span<const double>, double)>;

FieldMap as_field_map(FlowNetwork& net, int nz, int nx);

double squared_distance(std::span<const double> a, std::span<const double> b);

/// ||v(m0, 0) - m0||^2.
double warm_start_loss_sfm(const FieldMap& v, std::span<const double> m0);
/// ||g(z) - m0||^2 where g ignores t.
double warm_start_loss_dip(const FieldMap& g, std::span<const double> z,
                           std::span<const double> m0);

/// (1-t) x0 + t x1, exact at both endpoints.
std::vector<double> interpolate_path(std::span<const double> x0, std::span<const double> x1,
                                     double t);

/// ||v(x_t, t) - (x1 - x0)||^2 along the straight path.
double flow_matching_reference_loss(const FieldMap& v, std::span<const double> x0,
                                    std::span<const double> x1, double t);

}  // namespace sfwi::ad
