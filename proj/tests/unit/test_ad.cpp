#include <doctest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <iterator>

#include "sfwi/ad/flow_net.hpp"
#include "sfwi/ad/ops.hpp"
#include "support.hpp"

using namespace sfwi;
using namespace sfwi::ad;

namespace {

using Builder = std::function<Tensor(Tape&, std::vector<Tensor>&)>;

// Reverse-mode gradients of sum(r * f(params)) against central differences,
// for every entry of every parameter.
void fd_check(std::vector<Parameter>& params, const Builder& f, double h = 1e-6,
              double tol = 1e-4) {
  std::vector<double> r;
  auto loss = [&] {
    Tape tape;
    std::vector<Tensor> leaves;
    for (auto& p : params) leaves.push_back(tape.parameter(p));
    const Tensor y = f(tape, leaves);
    if (r.empty()) r = test::random_values(y.values().size(), 99);
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r[i] * y.values()[i];
    return s;
  };
  loss();
  {
    Tape tape;
    std::vector<Tensor> leaves;
    for (auto& p : params) {
      p.zero_grad();
      leaves.push_back(tape.parameter(p));
    }
    tape.backward(f(tape, leaves), r);
  }
  for (auto& p : params) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double v = p.value[i];
      p.value[i] = v + h;
      const double lp = loss();
      p.value[i] = v - h;
      const double lm = loss();
      p.value[i] = v;
      const double fd = (lp - lm) / (2 * h);
      CAPTURE(p.name);
      CAPTURE(i);
      REQUIRE((std::abs(p.grad[i] - fd) < 1e-9 || test::rel_err(p.grad[i], fd) < tol));
    }
  }
}

Parameter param(const std::string& name, Shape s, std::uint64_t seed, double lo = -1, double hi = 1) {
  Parameter p(name, std::move(s));
  p.value = test::random_values(p.value.size(), seed, lo, hi);
  return p;
}

Architecture tiny_arch() {
  Architecture a;
  a.base_channels = 8;
  a.multipliers = {1, 2};
  a.res_blocks = 1;
  a.groups = 4;
  return a;
}

}  // namespace

TEST_CASE("time embedding") {
  const auto e0 = time_embed(0.0, 16);
  for (int i = 0; i < 8; ++i) {
    CHECK(e0[i] == 0.0);
    CHECK(e0[i + 8] == 1.0);
  }
  for (double t : {0.1, 0.37, 0.9}) {
    const auto e = time_embed(t, 32);
    for (int i = 0; i < 16; ++i) CHECK(std::abs(e[i] * e[i] + e[i + 16] * e[i + 16] - 1.0) < 1e-12);
  }
  const auto a = time_embed(0.3, 64), b = time_embed(0.7, 64);
  CHECK(std::sqrt(squared_distance(a, b)) > 0.1);
  CHECK_THROWS_AS(time_embed(0.5, 7), InvalidArgument);
  CHECK_THROWS_AS(time_embed(0.5, 0), InvalidArgument);
}

TEST_CASE("primitive gradients") {
  SUBCASE("conv3x3 stride 1") {
    std::vector<Parameter> p{param("x", {2, 5, 6}, 1), param("w", {3, 2, 3, 3}, 2), param("b", {3}, 3)};
    fd_check(p, [](Tape&, std::vector<Tensor>& l) { return conv2d(l[0], l[1], l[2]); });
  }
  SUBCASE("conv1x1") {
    std::vector<Parameter> p{param("x", {3, 4, 4}, 4), param("w", {2, 3, 1, 1}, 5), param("b", {2}, 6)};
    fd_check(p, [](Tape&, std::vector<Tensor>& l) { return conv2d(l[0], l[1], l[2]); });
  }
  SUBCASE("strided downsample") {
    std::vector<Parameter> p{param("x", {2, 7, 6}, 7), param("w", {2, 2, 3, 3}, 8), param("b", {2}, 9)};
    fd_check(p, [](Tape&, std::vector<Tensor>& l) {
      const Tensor y = conv2d(l[0], l[1], l[2], 2);
      CHECK(y.shape() == Shape{2, 4, 3});
      return y;
    });
  }
  SUBCASE("group norm") {
    std::vector<Parameter> p{param("x", {4, 3, 5}, 10), param("g", {4}, 11), param("b", {4}, 12)};
    fd_check(p, [](Tape&, std::vector<Tensor>& l) { return group_norm(l[0], l[1], l[2], 2); });
  }
  SUBCASE("silu") {
    std::vector<Parameter> p{param("x", {2, 3, 3}, 13, -4, 4)};
    fd_check(p, [](Tape&, std::vector<Tensor>& l) { return silu(l[0]); });
  }
  SUBCASE("nearest upsample") {
    std::vector<Parameter> p{param("x", {2, 3, 4}, 14)};
    fd_check(p, [](Tape&, std::vector<Tensor>& l) { return upsample2x(l[0]); });
  }
  SUBCASE("linear") {
    std::vector<Parameter> p{param("x", {5}, 15), param("w", {3, 5}, 16), param("b", {3}, 17)};
    fd_check(p, [](Tape&, std::vector<Tensor>& l) { return linear(l[0], l[1], l[2]); });
  }
  SUBCASE("add, scale, affine") {
    std::vector<Parameter> p{param("a", {2, 2, 3}, 18), param("b", {2, 2, 3}, 19)};
    fd_check(p, [](Tape&, std::vector<Tensor>& l) {
      return affine(add(scale(l[0], -1.7), add(l[1], l[0])), 3.0, 2.0);
    });
  }
  SUBCASE("channel broadcast, concat, pad, crop") {
    std::vector<Parameter> p{param("x", {2, 3, 4}, 20), param("v", {2}, 21), param("y", {1, 3, 4}, 22)};
    fd_check(p, [](Tape&, std::vector<Tensor>& l) {
      const Tensor c = concat(add_channel(l[0], l[1]), l[2]);
      return crop(pad(c, 1, 2, 0, 3), 1, 1, 3, 3);
    });
  }
}

TEST_CASE("two-layer conv net gradients") {
  std::vector<Parameter> p{param("w1", {8, 1, 3, 3}, 30), param("b1", {8}, 31),
                           param("w2", {1, 8, 3, 3}, 32), param("b2", {1}, 33)};
  const auto x = test::random_values(36, 34);
  fd_check(p, [&](Tape& t, std::vector<Tensor>& l) {
    const Tensor in = t.constant(x, {1, 6, 6});
    return conv2d(silu(conv2d(in, l[0], l[1])), l[2], l[3]);
  });
}

TEST_CASE("tiny flow network gradients") {
  FlowNetwork net(tiny_arch(), 5);
  // give the zero-initialised head some weight so every path is exercised
  for (auto& p : net.params())
    if (p.name.rfind("out.", 0) == 0) p.value = test::random_values(p.value.size(), 6, -0.1, 0.1);
  const auto m = test::random_values(36, 7, 1500, 3000);
  const auto r = test::random_values(36, 8);
  auto loss = [&] {
    const auto y = net.evaluate(m, 6, 6, 0.4);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += r[i] * y[i];
    return s;
  };
  net.zero_grad();
  {
    Tape tape;
    tape.backward(net.forward(tape, m, 6, 6, 0.4), r);
  }
  // every block, a spread of entries in each (all of them for small blocks)
  const double h = 1e-6;
  for (auto& p : net.params()) {
    const std::size_t n = p.value.size(), stride = n <= 16 ? 1 : n / 7;
    for (std::size_t i = 0; i < n; i += stride) {
      const double v = p.value[i];
      p.value[i] = v + h;
      const double lp = loss();
      p.value[i] = v - h;
      const double lm = loss();
      p.value[i] = v;
      const double fd = (lp - lm) / (2 * h);
      CAPTURE(p.name);
      CAPTURE(i);
      REQUIRE((std::abs(p.grad[i] - fd) < 1e-6 || test::rel_err(p.grad[i], fd) < 1e-4));
    }
  }
}

TEST_CASE("tape contracts") {
  Parameter w = param("w", {2, 1, 3, 3}, 40), b = param("b", {2}, 41);
  const auto x = test::random_values(16, 42);
  auto run = [&](std::span<const double> ct) {
    w.zero_grad();
    b.zero_grad();
    Tape t;
    const Tensor y = conv2d(t.constant(x, {1, 4, 4}), t.parameter(w), t.parameter(b));
    t.backward(y, ct);
    return std::make_pair(w.grad, b.grad);
  };
  const auto zero = run(std::vector<double>(32, 0.0));
  for (double g : zero.first) CHECK(g == 0.0);
  for (double g : zero.second) CHECK(g == 0.0);
  const auto ct = test::random_values(32, 43);
  CHECK(run(ct) == run(ct));

  Tape empty;
  CHECK_THROWS_AS(empty.backward(Tensor(&empty, 0), {}), StateError);
  Tape t;
  const Tensor y = silu(t.parameter(w));
  std::vector<double> ones(y.values().size(), 1.0);
  t.backward(y, ones);
  CHECK_THROWS_AS(t.backward(y, ones), StateError);
  Tape other;
  const Tensor z = other.constant({1.0}, {1});
  CHECK_THROWS_AS(t.backward(z, std::vector<double>{1.0}), StateError);
}

TEST_CASE("unreachable parameters get zero gradient") {
  FlowNetwork net(tiny_arch(), 1);
  net.zero_grad();
  Tape tape;
  const auto m = test::random_values(64, 2, 1500, 2500);
  const Tensor y = net.forward(tape, m, 8, 8, 0.2);
  tape.backward(y, std::vector<double>(64, 0.0));
  for (const auto& p : net.params())
    for (double g : p.grad) REQUIRE(g == 0.0);
}

TEST_CASE("group norm removes a constant shift") {
  Tape t;
  const auto x = test::random_values(4 * 5 * 5, 50);
  auto shifted = x;
  for (double& v : shifted) v += 123.0;
  Parameter g("g", {4}), b("b", {4});
  std::fill(g.value.begin(), g.value.end(), 1.0);
  const Tensor a = group_norm(t.constant(x, {4, 5, 5}), t.parameter(g), t.parameter(b), 2);
  const Tensor c = group_norm(t.constant(shifted, {4, 5, 5}), t.parameter(g), t.parameter(b), 2);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(a.values()[i] - c.values()[i]) < 1e-10);
}

TEST_CASE("flow network forward") {
  FlowNetwork net(Architecture{}, 3);
  const auto m = test::random_values(30 * 27, 4, 1500, 4000);
  const auto y = net.evaluate(m, 30, 27, 0.5);
  REQUIRE(y.size() == m.size());
  for (double v : y) REQUIRE(v == 0.0);

  for (auto& p : net.params())
    if (p.name == "out.b") p.value[0] = 0.25;
  const auto y1 = net.evaluate(m, 30, 27, 0.5);
  const auto y2 = net.evaluate(m, 30, 27, 0.5);
  CHECK(y1 == y2);
  CHECK(y1[0] == doctest::Approx(0.25 * net.arch().output_scale));

  Architecture strict;
  strict.pad_input = false;
  FlowNetwork s(strict, 3);
  CHECK_THROWS_AS(s.evaluate(m, 30, 27, 0.5), ArchitectureError);
  CHECK_NOTHROW(s.evaluate(std::vector<double>(32 * 28, 2000.0), 32, 28, 0.5));
  CHECK_THROWS_AS(net.evaluate(m, 30, 26, 0.5), InvalidArgument);

  Architecture bad;
  bad.groups = 5;
  CHECK_THROWS_AS(FlowNetwork(bad, 1), ArchitectureError);
  CHECK(FlowNetwork(Architecture{}, 9).param("in.w").value ==
        FlowNetwork(Architecture{}, 9).param("in.w").value);
}

TEST_CASE("network checkpoint round trip") {
  const auto dir = test::scratch_dir("ad_ckpt");
  Architecture a = tiny_arch();
  a.input_offset = 2100.0;
  FlowNetwork net(a, 12);
  net.save(dir / "a.sfnp");
  const FlowNetwork back = FlowNetwork::load(dir / "a.sfnp");
  CHECK(back.arch() == net.arch());
  REQUIRE(back.params().size() == net.params().size());
  for (std::size_t k = 0; k < net.params().size(); ++k)
    for (std::size_t i = 0; i < net.params()[k].value.size(); ++i)
      REQUIRE(back.params()[k].value[i] == static_cast<float>(net.params()[k].value[i]));
  back.save(dir / "b.sfnp");
  auto bytes = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<char>(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(bytes(dir / "a.sfnp") == bytes(dir / "b.sfnp"));

  {
    std::ofstream(dir / "bad.sfnp", std::ios::binary) << "SFWIxxxx";
  }
  CHECK_THROWS_AS(FlowNetwork::load(dir / "bad.sfnp"), FormatError);
  std::filesystem::resize_file(dir / "a.sfnp", std::filesystem::file_size(dir / "a.sfnp") - 1);
  CHECK_THROWS_AS(FlowNetwork::load(dir / "a.sfnp"), FormatError);
}

TEST_CASE("warm start losses") {
  const auto m0 = test::random_values(64, 60, 1500, 2500);
  const FieldMap bypass = [](std::span<const double> f, double) {
    return std::vector<double>(f.begin(), f.end());
  };
  CHECK(warm_start_loss_sfm(bypass, m0) == 0.0);
  FlowNetwork net(tiny_arch(), 1);
  double s = 0.0;
  for (double v : m0) s += v * v;
  CHECK(warm_start_loss_sfm(as_field_map(net, 8, 8), m0) == doctest::Approx(s).epsilon(1e-14));
  const auto z = test::random_values(64, 61);
  CHECK(warm_start_loss_dip(as_field_map(net, 8, 8), z, m0) == doctest::Approx(s).epsilon(1e-14));
  CHECK_THROWS_AS(warm_start_loss_dip(bypass, z, std::vector<double>(63, 1.0)), InvalidArgument);
}

TEST_CASE("flow matching reference loss") {
  const auto x0 = test::random_values(64, 70, 1500, 2500);
  const auto x1 = test::random_values(64, 71, 1500, 2500);
  FlowNetwork net(tiny_arch(), 1);
  CHECK(flow_matching_reference_loss(as_field_map(net, 8, 8), x0, x0, 0.3) == 0.0);
  const FieldMap oracle = [&](std::span<const double>, double) {
    std::vector<double> d(x0.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = x1[i] - x0[i];
    return d;
  };
  for (double t : {0.0, 0.25, 0.5, 1.0}) CHECK(flow_matching_reference_loss(oracle, x0, x1, t) == 0.0);
  CHECK(interpolate_path(x0, x1, 0.0) == x0);
  CHECK(interpolate_path(x0, x1, 1.0) == x1);
  CHECK_THROWS_AS(flow_matching_reference_loss(oracle, x0, x1, 1.5), InvalidArgument);
  CHECK_THROWS_AS(interpolate_path(x0, std::vector<double>(3), 0.5), InvalidArgument);

  // the path is linear, so its velocity is x1 - x0 at every t
  const double h = 1.0 / 64;
  const auto a = interpolate_path(x0, x1, 0.5 - h), b = interpolate_path(x0, x1, 0.5 + h);
  for (std::size_t i = 0; i < x0.size(); ++i)
    CHECK(std::abs((b[i] - a[i]) / (2 * h) - (x1[i] - x0[i])) < 1e-9 * 2500);
}
