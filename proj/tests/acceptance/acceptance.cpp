// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--work DIR] [N ...]
//
// With no numbers every criterion runs. Exit status is 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sfwi/ad/flow_net.hpp"
#include "sfwi/ad/ops.hpp"
#include "sfwi/core/initial_models.hpp"
#include "sfwi/core/io.hpp"
#include "sfwi/harness/experiment.hpp"
#include "sfwi/metrics/metrics.hpp"
#include "sfwi/optim/optim.hpp"
#include "sfwi/wave/degrade.hpp"
#include "support.hpp"

using namespace sfwi;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// rel_err with an absolute floor for entries that are zero up to roundoff
double fd_error(double analytic, double fd, double floor) {
  return std::abs(analytic - fd) < floor ? 0.0 : test::rel_err(analytic, fd);
}

// ---------------------------------------------------------------------------

Outcome adjoint_gradient() {
  test::GradientFixture f;
  const ShotGather obs = simulate_shots(f.block, f.geom, f.wavelet, f.cfg);
  const MisfitGradient mg = model_gradient(f.background, f.geom, f.wavelet, obs, f.cfg);
  auto phi = [&](const VelocityModel& m) {
    return data_misfit(simulate_shots(m, f.geom, f.wavelet, f.cfg), obs);
  };
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> cell(0, static_cast<int>(f.grid.size()) - 1);
  // five-point central difference; the three-point stencil's h^2 term is
  // visible at cells whose gradient is small next to the local curvature
  auto shifted = [&](int i, double d) {
    VelocityModel m = f.background;
    m[i] += d;
    return phi(m);
  };
  const double h = 0.3;
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const int i = cell(rng);
    const double fd = (8 * (shifted(i, h) - shifted(i, -h)) - (shifted(i, 2 * h) - shifted(i, -2 * h))) / (12 * h);
    worst = std::max(worst, test::rel_err(mg.grad[i], fd));
  }
  return {worst < 1e-5, fmt("worst relative error %.2e over 10 cells", worst)};
}

// ---------------------------------------------------------------------------

using ad::Parameter;
using ad::Tape;
using ad::Tensor;
using Builder = std::function<Tensor(Tape&, std::vector<Tensor>&)>;

Parameter param(const std::string& name, ad::Shape s, std::uint64_t seed, double lo = -1, double hi = 1) {
  Parameter p(name, std::move(s));
  p.value = test::random_values(p.value.size(), seed, lo, hi);
  return p;
}

// worst relative error of d/dθ sum(r * f(θ)) over every entry
double primitive_error(std::vector<Parameter>& params, const Builder& f) {
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
  const double h = 1e-6;
  double worst = 0.0;
  for (auto& p : params)
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double v = p.value[i];
      p.value[i] = v + h;
      const double lp = loss();
      p.value[i] = v - h;
      const double lm = loss();
      p.value[i] = v;
      worst = std::max(worst, fd_error(p.grad[i], (lp - lm) / (2 * h), 1e-9));
    }
  return worst;
}

Outcome network_gradient() {
  std::map<std::string, double> err;
  {
    std::vector<Parameter> p{param("x", {2, 5, 6}, 1), param("w", {3, 2, 3, 3}, 2), param("b", {3}, 3)};
    err["conv3x3"] = primitive_error(p, [](Tape&, auto& l) { return ad::conv2d(l[0], l[1], l[2]); });
  }
  {
    std::vector<Parameter> p{param("x", {2, 7, 6}, 7), param("w", {2, 2, 3, 3}, 8), param("b", {2}, 9)};
    err["conv_stride2"] =
        primitive_error(p, [](Tape&, auto& l) { return ad::conv2d(l[0], l[1], l[2], 2); });
  }
  {
    std::vector<Parameter> p{param("x", {4, 3, 5}, 10), param("g", {4}, 11), param("b", {4}, 12)};
    err["group_norm"] = primitive_error(p, [](Tape&, auto& l) { return ad::group_norm(l[0], l[1], l[2], 2); });
  }
  {
    std::vector<Parameter> p{param("x", {2, 3, 3}, 13, -4, 4)};
    err["silu"] = primitive_error(p, [](Tape&, auto& l) { return ad::silu(l[0]); });
  }
  {
    std::vector<Parameter> p{param("x", {2, 3, 4}, 14)};
    err["upsample"] = primitive_error(p, [](Tape&, auto& l) { return ad::upsample2x(l[0]); });
  }
  {
    std::vector<Parameter> p{param("x", {5}, 15), param("w", {3, 5}, 16), param("b", {3}, 17)};
    err["linear"] = primitive_error(p, [](Tape&, auto& l) { return ad::linear(l[0], l[1], l[2]); });
  }
  {
    std::vector<Parameter> p{param("a", {2, 2, 3}, 18), param("b", {2, 2, 3}, 19)};
    err["elementwise"] = primitive_error(p, [](Tape&, auto& l) {
      return ad::affine(ad::add(ad::scale(l[0], -1.7), ad::add(l[1], l[0])), 3.0, 2.0);
    });
  }
  {
    std::vector<Parameter> p{param("x", {2, 3, 4}, 20), param("v", {2}, 21), param("y", {1, 3, 4}, 22)};
    err["concat_pad_crop"] = primitive_error(p, [](Tape&, auto& l) {
      return ad::crop(ad::pad(ad::concat(ad::add_channel(l[0], l[1]), l[2]), 1, 2, 0, 3), 1, 1, 3, 3);
    });
  }

  // Tiny network: single entries spread over every block, plus one
  // directional derivative per block that moves all of its entries at once.
  ad::Architecture a;
  a.base_channels = 8;
  a.multipliers = {1, 2};
  a.res_blocks = 1;
  a.groups = 4;
  ad::FlowNetwork net(a, 5);
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
  const double h = 1e-6;
  double entry = 0.0, direction = 0.0;
  std::uint64_t seed = 100;
  for (auto& p : net.params()) {
    const std::size_t n = p.value.size(), stride = n <= 16 ? 1 : n / 7;
    for (std::size_t i = 0; i < n; i += stride) {
      const double v = p.value[i];
      p.value[i] = v + h;
      const double lp = loss();
      p.value[i] = v - h;
      const double lm = loss();
      p.value[i] = v;
      entry = std::max(entry, fd_error(p.grad[i], (lp - lm) / (2 * h), 1e-6));
    }
    const auto d = test::random_values(n, ++seed);
    const std::vector<double> v0 = p.value;
    double dir = 0.0;
    for (std::size_t i = 0; i < n; ++i) dir += p.grad[i] * d[i];
    for (std::size_t i = 0; i < n; ++i) p.value[i] = v0[i] + h * d[i];
    const double lp = loss();
    for (std::size_t i = 0; i < n; ++i) p.value[i] = v0[i] - h * d[i];
    const double lm = loss();
    p.value = v0;
    direction = std::max(direction, fd_error(dir, (lp - lm) / (2 * h), 1e-6));
  }
  err["net_entries"] = entry;
  err["net_directions"] = direction;

  double worst = 0.0;
  std::string name;
  for (const auto& [k, v] : err)
    if (v >= worst) {
      worst = v;
      name = k;
    }
  return {worst < 1e-4, fmt("%zu checks, worst %.2e (%s), network has %zu parameters", err.size(), worst,
                            name.c_str(), net.parameter_count())};
}

// ---------------------------------------------------------------------------

Outcome tv_gradient() {
  double worst = 0.0;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    Grid2D g(16, 16, 10.0, 7.0);
    VelocityModel m(g, test::random_values(g.size(), seed, 1500, 3000));
    const auto r = tv_value_and_grad(m, 1e-3);
    const double h = 1e-3;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double v = m[i];
      m[i] = v + h;
      const double p = tv_value_and_grad(m, 1e-3).value;
      m[i] = v - h;
      const double q = tv_value_and_grad(m, 1e-3).value;
      m[i] = v;
      worst = std::max(worst, std::abs(r.grad[i] - (p - q) / (2 * h)) / (1.0 + std::abs(r.grad[i])));
    }
  }
  return {worst < 1e-5, fmt("worst error %.2e over 3 random 16x16 models", worst)};
}

// ---------------------------------------------------------------------------

// Block target inside a smoothed start; shared by the cheap driver checks.
struct Toy {
  test::GradientFixture f;
  InversionProblem problem;
  VelocityModel init;
  Toy()
      : problem{f.geom, f.wavelet, simulate_shots(f.block, f.geom, f.wavelet, f.cfg), f.cfg, f.block},
        init(gaussian_smooth(f.block, 4.0)) {}
};

InversionConfig toy_config(Method m, int steps) {
  InversionConfig c;
  c.method = m;
  c.total_physics_steps = steps;
  c.record_every = 2;
  c.arch.base_channels = 8;
  c.arch.multipliers = {1, 2};
  c.arch.res_blocks = 1;
  c.arch.groups = 4;
  c.sfm = {3, steps / 3};
  c.auto_lambda = true;
  return c;
}

Outcome endpoints() {
  const auto m0 = test::random_values(256, 1, 1500, 2500);
  const auto m1 = test::random_values(256, 2, 1500, 4500);
  bool start = true, end = true;
  for (double amp : {0.0, 1.0, 1e6}) {
    const auto v = test::random_values(256, 3, -amp, amp);
    const ad::FieldMap net = [&](std::span<const double>, double) { return v; };
    start = start && sfm_proposal(net, m0, m1, 0, 7).m_t == m0;
    const auto last = sfm_proposal(net, m0, m1, 6, 7);
    end = end && last.proposal == last.m_t;
  }
  Toy toy;
  const auto fwi = run_conventional_fwi(toy_config(Method::Fwi, 3), toy.init, toy.problem);
  const auto sfm = run_sfm_fwi(toy_config(Method::Sfm, 3), toy.init, toy.problem);
  const bool first = sfm.record.rows.front().misfit == fwi.initial_misfit &&
                     sfm.initial_misfit == fwi.initial_misfit;
  return {start && end && first,
          fmt("m_t(0)==m0 %s, proposal(1)==m_t %s, first misfit %.17g vs %.17g", start ? "yes" : "no",
              end ? "yes" : "no", sfm.record.rows.front().misfit, fwi.initial_misfit)};
}

// ---------------------------------------------------------------------------

struct Pair {
  harness::RunSummary fwi, sfm;
  double seconds_fwi, seconds_sfm;
  VelocityModel init;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

harness::RunSummary run_one(const std::string& ini, const char* method, const fs::path& dir,
                            double& seconds) {
  const harness::ExperimentConfig c = harness::parse_config(
      ini + "[method]\nname = " + method +
      "\ntotal_physics_steps = 300\nrecord_every = 30\nouter_steps = 10\ninner_steps = 30\n");
  const auto t0 = std::chrono::steady_clock::now();
  auto s = harness::run_experiment(c, dir / method);
  seconds = seconds_since(t0);
  return s;
}

Pair run_pair(const std::string& ini, const fs::path& dir) {
  double tf = 0, ts = 0;
  auto fwi = run_one(ini, "FWI", dir, tf);
  auto sfm = run_one(ini, "SFM", dir, ts);
  return {std::move(fwi), std::move(sfm), tf, ts, load_field(dir / "FWI" / "init.sfwi")};
}

double final_rel(const harness::RunSummary& s) { return *s.result.record.rows.back().rel_l2; }
double misfit_ratio(const harness::RunSummary& s) {
  return s.result.record.rows.back().misfit / s.result.initial_misfit;
}

const char* two_layer_ini = "[grid]\nbenchmark = two_layer\n";

const char* lens_ini =
    "[grid]\nbenchmark = lens\n[solver]\ndt = 0.0008\nnt = 600\n[scenario]\nname = poor_init\n";

std::optional<Pair> two_layer_runs;

const Pair& two_layer(const fs::path& work) {
  if (!two_layer_runs) two_layer_runs = run_pair(two_layer_ini, work / "two_layer");
  return *two_layer_runs;
}

Outcome ordering(const fs::path& work) {
  const Pair& p = two_layer(work);
  const double rf = final_rel(p.fwi), rs = final_rel(p.sfm);
  const double mf = misfit_ratio(p.fwi), ms = misfit_ratio(p.sfm);
  const double minutes = (p.seconds_fwi + p.seconds_sfm) / 60.0;
  return {rs <= rf && mf <= 0.5 && ms <= 0.5,
          fmt("rel_l2 SFM %.4f vs FWI %.4f (init %.4f); misfit kept SFM %.4f FWI %.4f; %.1f min",
              rs, rf, *p.fwi.result.record.rows.front().rel_l2, ms, mf, minutes)};
}

Outcome robustness(const fs::path& work) {
  const Pair p = run_pair(lens_ini, work / "lens_poor_init");
  const double rf = final_rel(p.fwi), rs = final_rel(p.sfm);
  return {rs <= rf, fmt("rel_l2 SFM %.4f vs FWI %.4f (init %.4f); %.1f min", rs, rf,
                        *p.fwi.result.record.rows.front().rel_l2,
                        (p.seconds_fwi + p.seconds_sfm) / 60.0)};
}

// ---------------------------------------------------------------------------

Outcome noise() {
  // damped multi-tone traces, 4 x 250 x 1200 = 1.2e6 samples
  const int shots = 4, receivers = 250, nt = 1200;
  std::vector<double> v(static_cast<std::size_t>(shots) * receivers * nt);
  for (int s = 0; s < shots; ++s)
    for (int r = 0; r < receivers; ++r)
      for (int n = 0; n < nt; ++n) {
        const double t = n * 1e-3, delay = 0.1 + 0.002 * r;
        v[(static_cast<std::size_t>(s) * receivers + r) * nt + n] =
            std::exp(-3.0 * t) * (std::sin(60.0 * (t - delay)) + 0.3 * std::cos(170.0 * t + s));
      }
  const ShotGather clean(shots, receivers, nt, 1e-3, v);
  double worst = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const double snr = measured_snr_db(clean, add_gaussian_noise(clean, 3.5, seed));
    worst = std::max(worst, std::abs(snr - 3.5));
  }
  return {worst <= 0.1, fmt("%zu samples, worst |SNR - 3.5 dB| = %.4f over 3 seeds", v.size(), worst)};
}

Outcome metric_identities() {
  const Grid2D g(48, 40, 10.0, 10.0);
  const VelocityModel m = harness::generate_synthetic_benchmark(harness::BenchmarkKind::Lens, g, 3);
  VelocityModel twice = m;
  for (std::size_t i = 0; i < twice.size(); ++i) twice[i] *= 2.0;
  const double r0 = rel_l2(m, m), r2 = rel_l2(twice, m), s = ssim(m, m);
  const int rank = effective_rank(VelocityModel(g, 2500.0));
  const SpectralReport d = deblur_report(m, m, DeblurBands{0.01, 0.04, 0.02});
  const double dmax = std::max({std::abs(d.r_band - 1), std::abs(d.hf_gain - 1),
                                std::abs(d.grad_energy_gain - 1), std::abs(d.p90_grad_gain - 1)});
  const bool ok = r0 == 0.0 && std::abs(r2 - 1.0) < 1e-12 && std::abs(s - 1.0) < 1e-9 && rank == 1 &&
                  dmax < 1e-9;
  return {ok, fmt("rel_l2(m,m)=%g rel_l2(2m,m)=%.15g ssim(m,m)-1=%.1e rank(const)=%d deblur dev %.1e", r0,
                  r2, s - 1.0, rank, dmax)};
}

Outcome budget() {
  Toy toy;
  std::string detail;
  bool ok = true;
  for (Method m : {Method::Fwi, Method::FwiTv, Method::Dip, Method::Sfm})
    for (int steps : {6, 12}) {
      const auto r = run_inversion(toy_config(m, steps), toy.init, toy.problem);
      ok = ok && r.counter.gradient_evaluations == steps;
      if (steps == 12) detail += fmt("%s %ld/%d ", method_name(m).c_str(), r.counter.gradient_evaluations, steps);
    }
  return {ok, detail + "(and 6/6 each)"};
}

Outcome determinism(const fs::path& work) {
  const std::string ini =
      "[grid]\nnx = 32\nnz = 32\nbenchmark = three_layer\n[acquisition]\nn_shots = 3\nn_receivers = 32\n"
      "f0 = 15\n[solver]\nnt = 350\n[scenario]\nname = noisy\n[method]\ntotal_physics_steps = 6\nrecord_every = 2\n"
      "outer_steps = 3\ninner_steps = 2\nbase_channels = 8\nmultipliers = 1,2\nres_blocks = 1\n"
      "groups = 4\nauto_lambda = true\n";
  std::string detail;
  bool ok = true;
  for (const char* method : {"FWI", "FWI_TV", "DIP", "SFM"}) {
    harness::ExperimentConfig c = harness::parse_config(ini + "name = " + method + "\n");
    c.solver.threads = 1;
    const fs::path a = work / "rerun" / method / "first", b = work / "rerun" / method / "second";
    harness::run_experiment(c, a);
    const auto manifest = nlohmann::json::parse(read_file(a / "manifest.json"));
    const harness::ExperimentConfig again = harness::parse_config(manifest["config"].get<std::string>());
    harness::run_experiment(again, b);
    const bool same = read_file(a / "convergence.csv") == read_file(b / "convergence.csv") &&
                      read_file(a / "final.sfwi") == read_file(b / "final.sfwi") &&
                      manifest["deterministic"].get<bool>();
    ok = ok && same;
    detail += fmt("%s %s ", method, same ? "identical" : "DIFFERS");
  }
  return {ok, detail};
}

Outcome rank_trajectory(const fs::path& work) {
  const Pair& p = two_layer(work);
  const int r0 = effective_rank(p.init), r1 = effective_rank(p.sfm.result.model);
  std::string curve;
  for (const auto& row : p.sfm.result.record.rows) curve += fmt("%d ", row.rank);
  const bool emitted = fs::exists(p.sfm.dir / "convergence.csv") && p.sfm.result.record.rows.size() > 2;
  return {r0 < r1 && emitted,
          fmt("rank init %d -> final SFM %d; curve [%s] in %s", r0, r1, curve.c_str(),
              (p.sfm.dir / "convergence.csv").c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "sfwi_acceptance";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work" && i + 1 < argc)
      work = argv[++i];
    else
      only.insert(std::stoi(a));
  }
  fs::remove_all(work);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"adjoint gradient vs finite differences", adjoint_gradient},
      {"network gradients vs finite differences", network_gradient},
      {"total variation gradient vs finite differences", tv_gradient},
      {"flow path endpoint identities", endpoints},
      {"two_layer ordering and misfit reduction", [&] { return ordering(work); }},
      {"lens with linear start: ordering", [&] { return robustness(work); }},
      {"noise at 3.5 dB", noise},
      {"metric identities", metric_identities},
      {"budget parity", budget},
      {"rerun from manifest is bit-identical", [&] { return determinism(work); }},
      {"effective rank grows under SFM", [&] { return rank_trajectory(work); }},
  };

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2d %s  %s: %s [%.1f s]\n", id, o.pass ? "PASS" : "FAIL",
                criteria[k].first.c_str(), o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d failed\n", failed);
  return failed == 0 ? 0 : 1;
}
