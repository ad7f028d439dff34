#include <doctest.h>

#include <cmath>
#include <fstream>

#include "sfwi/core/initial_models.hpp"
#include "sfwi/core/io.hpp"
#include "sfwi/core/model.hpp"
#include "sfwi/core/wavelet.hpp"
#include "support.hpp"

using namespace sfwi;

TEST_CASE("grid rejects degenerate shapes") {
  CHECK_THROWS_AS(Grid2D(7, 16, 10, 10), InvalidArgument);
  CHECK_THROWS_AS(Grid2D(16, 7, 10, 10), InvalidArgument);
  CHECK_THROWS_AS(Grid2D(16, 16, 0.0, 10), InvalidArgument);
  CHECK_THROWS_AS(Grid2D(16, 16, 10, -1.0), InvalidArgument);
  Grid2D g(16, 9, 10, 5);
  CHECK(g.size() == 144);
  CHECK(g.index(2, 3) == 2 * 16 + 3);
}

TEST_CASE("field value count must match grid") {
  Grid2D g(8, 8, 1, 1);
  CHECK_THROWS_AS(VelocityModel(g, std::vector<double>(63, 1.0)), InvalidArgument);
}

TEST_CASE("acquisition validation") {
  Grid2D g(16, 16, 10, 10);
  AcquisitionGeometry a = surface_acquisition(g, 3, 16, 1, 1);
  CHECK(a.n_shots() == 3);
  CHECK(a.sources.front().x == 0);
  CHECK(a.sources.back().x == 15);
  CHECK(a.n_receivers() == 16);
  a.receivers.push_back({16, 1});
  CHECK_THROWS_AS(a.validate(g), InvalidArgument);
  AcquisitionGeometry empty;
  CHECK_THROWS_AS(empty.validate(g), InvalidArgument);
}

TEST_CASE("ricker wavelet") {
  const auto w = make_ricker(10.0, 1e-3, 400, 0.15);
  CHECK(w.samples.size() == 400);
  CHECK(w.samples[150] == doctest::Approx(1.0));
  // zero crossings at tau = +-1/(pi f0 sqrt(2))
  const double tz = 1.0 / (M_PI * 10.0 * std::sqrt(2.0));
  CHECK(std::abs(ricker_value(10.0, 0.15, 0.15 + tz)) < 1e-12);
  CHECK(ricker_value(10.0, 0.15, 0.15 + 2 * tz) < 0.0);
  CHECK_THROWS_AS(make_ricker(0.0, 1e-3, 10, 0.1), InvalidArgument);
  CHECK_THROWS_AS(make_ricker(10.0, 1e-3, 0, 0.1), InvalidArgument);
  const auto s = scaled(w, 2.0);
  CHECK(s.samples[150] == doctest::Approx(2.0));
}

TEST_CASE("gaussian smoothing") {
  Grid2D g(24, 20, 10, 10);
  VelocityModel c(g, 2500.0);
  CHECK(gaussian_smooth(c, 3.0) == c);
  CHECK_THROWS_AS(gaussian_smooth(c, -1.0), InvalidArgument);

  VelocityModel m(g, test::random_values(g.size(), 3, 1500, 3000));
  CHECK(gaussian_smooth(m, 0.0) == m);
  const auto s = gaussian_smooth(m, 2.0);
  // convex combination of neighbours: the range can only shrink
  CHECK(max_value(s) <= max_value(m));
  CHECK(min_value(s) >= min_value(m));
  CHECK(max_value(s) - min_value(s) < 0.5 * (max_value(m) - min_value(m)));
}

TEST_CASE("linear gradient model") {
  Grid2D g(8, 9, 10, 10);
  const auto m = linear_gradient_model(g, 1500.0, 2300.0);
  for (int z = 0; z < 9; ++z)
    for (int x = 0; x < 8; ++x) CHECK(m.at(z, x) == doctest::Approx(1500.0 + 100.0 * z));
}

TEST_CASE("field round trip and checksum") {
  const auto dir = test::scratch_dir("core_io");
  Grid2D g(12, 10, 7.5, 5.0);
  VelocityModel m(g, test::random_values(g.size(), 5, 1500, 4500));
  const auto r = round_to_storage(m);
  save_field(dir / "m.sfwi", m);
  const auto back = load_field(dir / "m.sfwi");
  CHECK(back == r);
  CHECK(back.grid() == g);
  CHECK(field_checksum(back) == field_checksum(m));
  VelocityModel other = r;
  other[3] += 1.0;
  CHECK(field_checksum(other) != field_checksum(r));
}

TEST_CASE("gather round trip") {
  const auto dir = test::scratch_dir("core_gather");
  ShotGather gth(2, 3, 5, 1e-3, test::random_values(30, 9));
  save_gather(dir / "d.sgth", gth);
  const auto back = load_gather(dir / "d.sgth");
  CHECK(back.same_shape(gth));
  CHECK(back.dt() == gth.dt());
  for (std::size_t i = 0; i < 30; ++i) CHECK(back.values()[i] == static_cast<float>(gth.values()[i]));
}

TEST_CASE("malformed files report byte offsets") {
  const auto dir = test::scratch_dir("core_bad");
  {
    std::ofstream(dir / "bad.sfwi", std::ios::binary) << "NOPE....";
  }
  try {
    load_field(dir / "bad.sfwi");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 0);
    CHECK(std::string(e.what()).find("SFWI") != std::string::npos);
  }

  Grid2D g(8, 8, 1, 1);
  save_field(dir / "ok.sfwi", VelocityModel(g, 2000.0));
  const auto full = std::filesystem::file_size(dir / "ok.sfwi");
  std::filesystem::resize_file(dir / "ok.sfwi", full - 4);
  try {
    load_field(dir / "ok.sfwi");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 4 + 4 + 4 + 4 + 8 + 8);
  }
  CHECK_THROWS_AS(load_field(dir / "missing.sfwi"), IoError);
}
