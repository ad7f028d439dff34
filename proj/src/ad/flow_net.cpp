#include "sfwi/ad/flow_net.hpp"

#include <cmath>
#include <random>

#include "sfwi/core/binary.hpp"

namespace sfwi::ad {

std::vector<double> time_embed(double t, int dim, double multiplier) {
  if (dim < 2 || dim % 2 != 0)
    throw InvalidArgument("time embedding dimension must be even and >= 2, got " +
                          std::to_string(dim));
  const int half = dim / 2;
  std::vector<double> out(dim);
  for (int i = 0; i < half; ++i) {
    const double w = std::pow(10000.0, -2.0 * i / dim);
    out[i] = std::sin(t * multiplier * w);
    out[i + half] = std::cos(t * multiplier * w);
  }
  return out;
}

void Architecture::validate() const {
  auto fail = [](const std::string& m) { throw ArchitectureError(m); };
  if (base_channels < 2 || base_channels % 2 != 0) fail("base_channels must be even and >= 2");
  if (multipliers.empty()) fail("at least one level is required");
  for (int m : multipliers)
    if (m < 1) fail("channel multipliers must be >= 1");
  if (res_blocks < 1) fail("res_blocks must be >= 1");
  if (groups < 1) fail("groups must be >= 1");
  if (!(input_scale > 0.0) || !(output_scale > 0.0)) fail("input/output scales must be positive");
  auto check = [&](int c) {
    if (c % groups != 0)
      fail("group norm over " + std::to_string(c) + " channels is not divisible into " +
           std::to_string(groups) + " groups");
  };
  // Every channel count that reaches a group norm.
  for (std::size_t l = 0; l < multipliers.size(); ++l) check(base_channels * multipliers[l]);
  check(base_channels * multipliers[0]);
  std::vector<int> skips{base_channels * multipliers[0]};
  int ch = skips.back();
  for (int l = 0; l < levels(); ++l) {
    for (int r = 0; r < res_blocks; ++r) skips.push_back(ch = base_channels * multipliers[l]);
    if (l + 1 < levels()) skips.push_back(ch);
  }
  for (int l = levels() - 1; l >= 0; --l) {
    for (int r = 0; r <= res_blocks; ++r) {
      check(ch + skips.back());
      skips.pop_back();
      ch = base_channels * multipliers[l];
    }
  }
}

FlowNetwork::FlowNetwork(Architecture arch, std::uint64_t seed) : arch_(std::move(arch)) {
  arch_.validate();
  build();
  initialize(seed);
}

int FlowNetwork::add_param(const std::string& name, Shape shape, int fan_in) {
  params_.emplace_back(name, std::move(shape));
  fan_in_.push_back(fan_in);
  return static_cast<int>(params_.size()) - 1;
}

FlowNetwork::Conv FlowNetwork::make_conv(const std::string& name, int cin, int cout, int k) {
  const int fan = cin * k * k;
  return {add_param(name + ".w", {cout, cin, k, k}, fan), add_param(name + ".b", {cout}, fan)};
}

FlowNetwork::Norm FlowNetwork::make_norm(const std::string& name, int c) {
  Norm n{add_param(name + ".gamma", {c}, 0), add_param(name + ".beta", {c}, 0)};
  std::fill(params_[n.g].value.begin(), params_[n.g].value.end(), 1.0);
  return n;
}

FlowNetwork::Res FlowNetwork::make_res(const std::string& name, int cin, int cout) {
  Res r;
  const int temb = 4 * arch_.base_channels;
  r.n1 = make_norm(name + ".norm1", cin);
  r.c1 = make_conv(name + ".conv1", cin, cout, 3);
  r.tw = add_param(name + ".temb.w", {cout, temb}, temb);
  r.tb = add_param(name + ".temb.b", {cout}, temb);
  r.n2 = make_norm(name + ".norm2", cout);
  r.c2 = make_conv(name + ".conv2", cout, cout, 3);
  if (cin != cout) r.skip = make_conv(name + ".skip", cin, cout, 1);
  return r;
}

void FlowNetwork::build() {
  const int b = arch_.base_channels;
  const int td = arch_.time_dim();
  t1w_ = add_param("time.fc1.w", {4 * b, td}, td);
  t1b_ = add_param("time.fc1.b", {4 * b}, td);
  t2w_ = add_param("time.fc2.w", {4 * b, 4 * b}, 4 * b);
  t2b_ = add_param("time.fc2.b", {4 * b}, 4 * b);

  int ch = b * arch_.multipliers[0];
  conv_in_ = make_conv("in", 1, ch, 3);
  std::vector<int> skips{ch};
  down_.resize(arch_.levels());
  for (int l = 0; l < arch_.levels(); ++l) {
    const int out = b * arch_.multipliers[l];
    for (int r = 0; r < arch_.res_blocks; ++r) {
      down_[l].push_back(
          make_res("down" + std::to_string(l) + ".res" + std::to_string(r), ch, out));
      skips.push_back(ch = out);
    }
    if (l + 1 < arch_.levels()) {
      downsample_.push_back(make_conv("down" + std::to_string(l) + ".pool", ch, ch, 3));
      skips.push_back(ch);
    }
  }
  mid1_ = make_res("mid.res0", ch, ch);
  mid2_ = make_res("mid.res1", ch, ch);
  up_.resize(arch_.levels());
  for (int l = arch_.levels() - 1; l >= 0; --l) {
    const int out = b * arch_.multipliers[l];
    for (int r = 0; r <= arch_.res_blocks; ++r) {
      up_[l].push_back(make_res("up" + std::to_string(l) + ".res" + std::to_string(r),
                                ch + skips.back(), out));
      skips.pop_back();
      ch = out;
    }
    if (l > 0) upsample_.push_back(make_conv("up" + std::to_string(l) + ".upconv", ch, ch, 3));
  }
  out_norm_ = make_norm("out.norm", ch);
  conv_out_ = make_conv("out", ch, 1, 3);
  fan_in_[conv_out_.w] = 0;
  fan_in_[conv_out_.b] = 0;
}

void FlowNetwork::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (fan_in_[i] == 0) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in_[i]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : params_[i].value) v = dist(rng);
  }
}

std::size_t FlowNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

const Parameter& FlowNetwork::param(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return p;
  throw InvalidArgument("no parameter named " + name);
}

void FlowNetwork::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

bool FlowNetwork::finite() const {
  for (const auto& p : params_)
    for (double v : p.value)
      if (!std::isfinite(v)) return false;
  return true;
}

Tensor FlowNetwork::conv(Tape& tape, const Conv& c, const Tensor& x, int stride) {
  return conv2d(x, p(tape, c.w), p(tape, c.b), stride);
}

Tensor FlowNetwork::norm_act(Tape& tape, const Norm& n, const Tensor& x) {
  return silu(group_norm(x, p(tape, n.g), p(tape, n.b), arch_.groups));
}

Tensor FlowNetwork::res(Tape& tape, const Res& r, const Tensor& x, const Tensor& temb) {
  Tensor h = conv(tape, r.c1, norm_act(tape, r.n1, x));
  h = add_channel(h, linear(temb, p(tape, r.tw), p(tape, r.tb)));
  h = conv(tape, r.c2, norm_act(tape, r.n2, h));
  const Tensor skip = r.skip.w >= 0 ? conv(tape, r.skip, x) : x;
  return add(skip, h);
}

Tensor FlowNetwork::forward(Tape& tape, std::span<const double> field, int nz, int nx, double t) {
  if (nz < 1 || nx < 1 || field.size() != static_cast<std::size_t>(nz) * nx)
    throw InvalidArgument("network input does not match a " + std::to_string(nz) + "x" +
                          std::to_string(nx) + " grid");
  const int div = arch_.divisor();
  if (!arch_.pad_input && (nz % div != 0 || nx % div != 0))
    throw ArchitectureError("grid " + std::to_string(nz) + "x" + std::to_string(nx) +
                            " must be divisible by " + std::to_string(div) + " in both axes for " +
                            std::to_string(arch_.levels()) + " levels with padding disabled");
  const int pz = (div - nz % div) % div;
  const int px = (div - nx % div) % div;

  std::vector<double> in(field.begin(), field.end());
  for (double& v : in) v = (v - arch_.input_offset) / arch_.input_scale;
  Tensor x = tape.constant(std::move(in), {1, nz, nx});
  if (pz || px) x = pad(x, pz / 2, pz - pz / 2, px / 2, px - px / 2);

  const Tensor te = tape.constant(time_embed(t, arch_.time_dim(), arch_.time_multiplier),
                                  {arch_.time_dim()});
  Tensor temb = linear(silu(linear(te, p(tape, t1w_), p(tape, t1b_))), p(tape, t2w_), p(tape, t2b_));
  temb = silu(temb);

  Tensor h = conv(tape, conv_in_, x);
  std::vector<Tensor> skips{h};
  for (int l = 0; l < arch_.levels(); ++l) {
    for (const Res& r : down_[l]) skips.push_back(h = res(tape, r, h, temb));
    if (l + 1 < arch_.levels()) skips.push_back(h = conv(tape, downsample_[l], h, 2));
  }
  h = res(tape, mid2_, res(tape, mid1_, h, temb), temb);
  std::size_t u = 0;
  for (int l = arch_.levels() - 1; l >= 0; --l) {
    for (const Res& r : up_[l]) {
      h = res(tape, r, concat(h, skips.back()), temb);
      skips.pop_back();
    }
    if (l > 0) h = conv(tape, upsample_[u++], upsample2x(h));
  }
  h = conv(tape, conv_out_, norm_act(tape, out_norm_, h));
  if (pz || px) h = crop(h, pz / 2, px / 2, nz, nx);
  return affine(h, arch_.output_scale, arch_.output_offset);
}

std::vector<double> FlowNetwork::evaluate(std::span<const double> field, int nz, int nx,
                                          double t) {
  Tape tape;
  const Tensor y = forward(tape, field, nz, nx, t);
  return {y.values().begin(), y.values().end()};
}

namespace {
constexpr std::uint32_t kNetVersion = 1;
}

void FlowNetwork::save(const std::filesystem::path& path) const {
  binary::Writer w;
  w.magic("SFNP");
  w.put<std::uint32_t>(kNetVersion);
  w.put<std::uint32_t>(arch_.base_channels);
  w.put<std::uint32_t>(arch_.levels());
  for (int m : arch_.multipliers) w.put<std::uint32_t>(m);
  w.put<std::uint32_t>(arch_.res_blocks);
  w.put<std::uint32_t>(arch_.groups);
  w.put<double>(arch_.time_multiplier);
  w.put<double>(arch_.input_offset);
  w.put<double>(arch_.input_scale);
  w.put<double>(arch_.output_scale);
  w.put<double>(arch_.output_offset);
  w.put<std::uint8_t>(arch_.pad_input ? 1 : 0);
  w.put<std::uint64_t>(parameter_count());
  for (const auto& p : params_)
    for (double v : p.value) w.put<float>(static_cast<float>(v));
  w.flush(path);
}

FlowNetwork FlowNetwork::load(const std::filesystem::path& path) {
  binary::Reader r(path);
  r.expect_magic("SFNP");
  const std::uint64_t vpos = r.pos();
  binary::check_version(r.get<std::uint32_t>("version"), kNetVersion, vpos);
  Architecture a;
  a.base_channels = static_cast<int>(r.get<std::uint32_t>("base_channels"));
  const std::uint64_t lpos = r.pos();
  const auto levels = r.get<std::uint32_t>("levels");
  if (levels < 1 || levels > 16) throw FormatError("implausible level count", lpos);
  a.multipliers.assign(levels, 0);
  for (auto& m : a.multipliers) m = static_cast<int>(r.get<std::uint32_t>("multiplier"));
  a.res_blocks = static_cast<int>(r.get<std::uint32_t>("res_blocks"));
  a.groups = static_cast<int>(r.get<std::uint32_t>("groups"));
  a.time_multiplier = r.get<double>("time_multiplier");
  a.input_offset = r.get<double>("input_offset");
  a.input_scale = r.get<double>("input_scale");
  a.output_scale = r.get<double>("output_scale");
  a.output_offset = r.get<double>("output_offset");
  a.pad_input = r.get<std::uint8_t>("pad_input") != 0;
  const std::uint64_t cpos = r.pos();
  const auto count = r.get<std::uint64_t>("parameter count");
  FlowNetwork net = [&] {
    try {
      return FlowNetwork(a, 0);
    } catch (const ArchitectureError& e) {
      throw FormatError(std::string("invalid architecture: ") + e.what(), lpos);
    }
  }();
  if (count != net.parameter_count())
    throw FormatError("parameter count " + std::to_string(count) + " does not match descriptor (" +
                          std::to_string(net.parameter_count()) + ")",
                      cpos);
  const std::vector<double> flat = r.floats(count, "parameters");
  std::size_t k = 0;
  for (auto& p : net.params_)
    for (double& v : p.value) v = flat[k++];
  return net;
}

FieldMap as_field_map(FlowNetwork& net, int nz, int nx) {
  return [&net, nz, nx](std::span<const double> f, double t) { return net.evaluate(f, nz, nx, t); };
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw InvalidArgument("size mismatch: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double warm_start_loss_sfm(const FieldMap& v, std::span<const double> m0) {
  return squared_distance(v(m0, 0.0), m0);
}

double warm_start_loss_dip(const FieldMap& g, std::span<const double> z,
                           std::span<const double> m0) {
  return squared_distance(g(z, 0.0), m0);
}

std::vector<double> interpolate_path(std::span<const double> x0, std::span<const double> x1,
                                     double t) {
  if (x0.size() != x1.size()) throw InvalidArgument("path endpoints differ in size");
  std::vector<double> xt(x0.size());
  if (t == 0.0) return {x0.begin(), x0.end()};
  if (t == 1.0) return {x1.begin(), x1.end()};
  for (std::size_t i = 0; i < xt.size(); ++i) xt[i] = (1.0 - t) * x0[i] + t * x1[i];
  return xt;
}

double flow_matching_reference_loss(const FieldMap& v, std::span<const double> x0,
                                    std::span<const double> x1, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("t must lie in [0,1]");
  const std::vector<double> xt = interpolate_path(x0, x1, t);
  std::vector<double> target(x0.size());
  for (std::size_t i = 0; i < target.size(); ++i) target[i] = x1[i] - x0[i];
  return squared_distance(v(xt, t), target);
}

}  // namespace sfwi::ad
