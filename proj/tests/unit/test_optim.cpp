#include <doctest.h>

#include <cmath>
#include <limits>

#include "sfwi/optim/optim.hpp"
#include "support.hpp"

using namespace sfwi;

TEST_CASE("adamw first step") {
  AdamWState s({}, 3);
  std::vector<double> p{1.0, -2.0, 0.5};
  const std::vector<double> g{1.0, 1.0, 1.0};
  adamw_step(s, p, g);
  CHECK(std::abs(p[0] - (1.0 - 2e-4)) < 1e-9);
  CHECK(std::abs(p[1] - (-2.0 - 2e-4)) < 1e-9);
  CHECK(s.step == 1);

  AdamWConfig wd;
  wd.weight_decay = 0.01;
  AdamWState d(wd, 1);
  std::vector<double> q{3.0};
  const std::vector<double> zero{0.0};
  adamw_step(d, q, zero);
  CHECK(q[0] == doctest::Approx(3.0 * (1.0 - 2e-6)).epsilon(1e-15));
}

TEST_CASE("adamw is scale equivariant and bounded by the learning rate") {
  AdamWConfig c;
  c.eps = 1e-300;  // effectively zero
  for (double k : {1e-3, 1.0, 1e4}) {
    AdamWState a(c, 200), b(c, 200);
    std::vector<double> p(200, 0.0), q(200, 0.0);
    const auto fixed = test::random_values(200, 7, 1e-3, 10.0);
    for (int it = 0; it < 50; ++it) {
      auto g = test::random_values(200, 100 + it, -1e3, 1e3);
      auto gs = g;
      for (double& v : gs) v *= k;
      adamw_step(a, p, g);
      adamw_step(b, q, gs);
      for (std::size_t i = 0; i < p.size(); ++i) REQUIRE(std::abs(p[i] - q[i]) <= 1e-12 * (1 + std::abs(p[i])));
    }
    // stationary gradients: |delta| <= lr
    AdamWState s(c, 200);
    std::vector<double> r(200, 0.0);
    std::vector<double> g(200);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = (i % 2 ? -k : k) * fixed[i];
    for (int it = 0; it < 50; ++it) {
      const auto before = r;
      adamw_step(s, r, g);
      for (std::size_t i = 0; i < r.size(); ++i) REQUIRE(std::abs(r[i] - before[i]) <= 2e-4 * (1 + 1e-6));
    }
  }
}

TEST_CASE("adamw rejects bad input") {
  AdamWConfig c;
  c.lr = -1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.beta1 = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);

  AdamWState s({}, 2);
  std::vector<double> p{1.0, 2.0};
  const std::vector<double> g{1.0, std::numeric_limits<double>::quiet_NaN()};
  try {
    adamw_step(s, p, g, "net.w");
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("net.w") != std::string::npos);
  }
  CHECK(p == std::vector<double>{1.0, 2.0});
  CHECK_THROWS_AS(adamw_step(s, p, std::vector<double>{1.0}), InvalidArgument);
}

TEST_CASE("adamw over blocks leaves everything untouched on a bad gradient") {
  AdamW opt({});
  std::vector<double> a{1.0, 1.0}, b{2.0};
  const std::vector<double> ga{1.0, -1.0}, gb{std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(opt.step({{"a", a, ga}, {"b", b, gb}}), NumericError);
  CHECK(a == std::vector<double>{1.0, 1.0});
  CHECK(opt.steps() == 0);
  const std::vector<double> gb_ok{1.0};
  opt.step({{"a", a, ga}, {"b", b, gb_ok}});
  CHECK(opt.steps() == 1);
  CHECK(a[0] == doctest::Approx(1.0 - 2e-4));
  CHECK(a[1] == doctest::Approx(1.0 + 2e-4));
}

TEST_CASE("bounds projection") {
  auto v = test::random_values(500, 3, 0.0, 6000.0);
  const Bounds b{1400.0, 5000.0};
  auto ref = v;
  for (double& x : ref) x = x < 1400.0 ? 1400.0 : (x > 5000.0 ? 5000.0 : x);
  project_bounds(v, b);
  CHECK(v == ref);

  std::vector<double> lo{-5.0, 7000.0};
  project_bounds(lo, Bounds{});
  CHECK(lo == std::vector<double>{1000.0, 7000.0});
  CHECK_THROWS_AS((Bounds{2000.0, 1000.0}).validate(), InvalidArgument);
  CHECK_THROWS_AS((Bounds{0.0, std::nullopt}).validate(), InvalidArgument);
}

TEST_CASE("total variation gradient matches finite differences") {
  Grid2D g(16, 16, 10.0, 7.0);
  VelocityModel m(g, test::random_values(g.size(), 11, 1500, 3000));
  const auto r = tv_value_and_grad(m, 1e-3);
  const double h = 1e-3;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double v = m[i];
    m[i] = v + h;
    const double p = tv_value_and_grad(m, 1e-3).value;
    m[i] = v - h;
    const double q = tv_value_and_grad(m, 1e-3).value;
    m[i] = v;
    REQUIRE(std::abs(r.grad[i] - (p - q) / (2 * h)) < 1e-5 * (1.0 + std::abs(r.grad[i])));
  }
  double sum = 0.0, mag = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    sum += r.grad[i];
    mag += std::abs(r.grad[i]);
  }
  CHECK(std::abs(sum) < 1e-10 * mag);
}

TEST_CASE("total variation closed forms") {
  Grid2D g(12, 10, 5.0, 5.0);
  const double eps = 1e-3;
  const auto c = tv_value_and_grad(VelocityModel(g, 2000.0), eps);
  CHECK(c.value == doctest::Approx(12 * 10 * eps));
  for (std::size_t i = 0; i < c.grad.size(); ++i) CHECK(c.grad[i] == 0.0);

  // a ramp in x with slope s: (nx-1) columns see |s|, the last sees eps
  VelocityModel ramp(g, 0.0);
  const double s = 4.0;
  for (int z = 0; z < 10; ++z)
    for (int x = 0; x < 12; ++x) ramp.at(z, x) = 1500.0 + s * 5.0 * x;
  const double expect = 10 * (11 * std::sqrt(s * s + eps * eps) + eps);
  CHECK(tv_value_and_grad(ramp, eps).value == doctest::Approx(expect).epsilon(1e-12));
  CHECK(tv_value_and_grad(ramp, 1e-9).value == doctest::Approx(10 * 11 * s).epsilon(1e-9));
  CHECK_THROWS_AS(tv_value_and_grad(ramp, 0.0), InvalidArgument);
}
