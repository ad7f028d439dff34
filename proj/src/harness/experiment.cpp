#include "sfwi/harness/experiment.hpp"

#include <chrono>
#include <ctime>
#include <limits>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "sfwi/core/initial_models.hpp"
#include "sfwi/core/io.hpp"
#include "sfwi/harness/plot.hpp"
#include "sfwi/metrics/metrics.hpp"
#include "sfwi/wave/degrade.hpp"

#ifndef SFWI_VERSION
#define SFWI_VERSION "0.0.0"
#endif

namespace sfwi::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out || !(out << text)) throw IoError("cannot write " + p.string());
}

double row_mean(const VelocityModel& m, int z) {
  double s = 0.0;
  for (int x = 0; x < m.grid().nx(); ++x) s += m.at(z, x);
  return s / m.grid().nx();
}

void make_dirs(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create directory " + p.string() + ": " + ec.message());
}

}  // namespace

PreparedProblem prepare_problem(const ExperimentConfig& cfg) {
  const Grid2D grid = cfg.grid();
  VelocityModel truth = cfg.truth_path.empty()
                            ? generate_synthetic_benchmark(cfg.benchmark, grid, cfg.model_seed)
                            : load_field(cfg.truth_path);
  if (!(truth.grid() == grid))
    throw ConfigError({"grid: truth file " + cfg.truth_path + " does not match nx/nz/dx/dz"});

  const double need = max_stable_dt(grid, max_value(truth), cfg.solver.cfl_safety);
  if (cfg.solver.dt > need)
    throw ConfigError({"solver.dt: " + std::to_string(cfg.solver.dt) +
                       " s is unstable for the truth model; need dt <= " + std::to_string(need)});

  const Scenario& sc = cfg.scenario;
  AcquisitionGeometry geom = surface_acquisition(grid, cfg.n_shots, cfg.n_receivers,
                                                 cfg.source_depth, cfg.receiver_depth);
  if (sc.kind == ScenarioKind::SparseShots) geom = subsample_shots(geom, sc.n_keep_shots);

  VelocityModel init =
      sc.init == InitKind::Linear
          ? linear_gradient_model(grid, sc.v_top ? *sc.v_top : row_mean(truth, 0),
                                  sc.v_bottom ? *sc.v_bottom : row_mean(truth, grid.nz() - 1))
          : gaussian_smooth(truth, sc.smooth_sigma);

  // one absorbing profile for the observed data and every inversion
  SolverConfig solver = cfg.solver;
  if (solver.pml_velocity <= 0.0) solver.pml_velocity = max_value(init);

  const RickerWavelet wavelet = make_ricker(cfg.f0, cfg.solver.dt, cfg.solver.nt, cfg.source_delay());
  ShotGather clean = simulate_shots(truth, geom, wavelet, solver);
  ShotGather observed = clean;
  if (sc.kind == ScenarioKind::Noisy)
    observed = add_gaussian_noise(clean, sc.snr_db,
                                  sc.noise_seed ? *sc.noise_seed : cfg.inversion.seed + 1);

  InversionProblem problem{geom, wavelet, observed, solver, truth};
  return {std::move(truth), std::move(init), std::move(clean), std::move(problem)};
}

RunSummary run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const std::string started = utc_now();
  make_dirs(out_dir);
  // a stale manifest would make a failed re-run look complete
  fs::remove(out_dir / "manifest.json");
  write_text(out_dir / "config.echo", echo_config(cfg));

  const PreparedProblem prep = prepare_problem(cfg);
  make_dirs(out_dir / "gathers");
  save_field(out_dir / "truth.sfwi", prep.truth);
  save_field(out_dir / "init.sfwi", prep.init);
  save_gather(out_dir / "gathers" / "clean.sgth", prep.clean);
  save_gather(out_dir / "gathers" / "observed.sgth", prep.problem.observed);

  InversionHooks hooks;
  if (cfg.snapshots) {
    make_dirs(out_dir / "snaps");
    hooks.on_record = [&](int step, const VelocityModel& m) {
      if (cfg.snapshot_every == 0 || step % cfg.snapshot_every == 0 ||
          step == cfg.inversion.total_physics_steps)
        save_field(out_dir / "snaps" / ("snap_" + std::to_string(step) + ".sfwi"), m);
    };
  }

  RunSummary sum{out_dir, run_inversion(cfg.inversion, prep.init, prep.problem, hooks),
                 field_checksum(prep.truth)};
  const InversionResult& r = sum.result;
  r.record.write_csv(out_dir / "convergence.csv");
  save_field(out_dir / "final.sfwi", r.model);

  json j;
  j["version"] = SFWI_VERSION;
  j["method"] = method_name(cfg.inversion.method);
  j["scenario"] = scenario_name(cfg.scenario.kind);
  j["benchmark"] = cfg.truth_path.empty() ? benchmark_name(cfg.benchmark) : cfg.truth_path;
  j["seed"] = cfg.inversion.seed;
  j["model_seed"] = cfg.model_seed;
  j["total_physics_steps"] = cfg.inversion.total_physics_steps;
  j["evaluations"] = {{"gradient", r.counter.gradient_evaluations},
                      {"forward_only", r.counter.forward_evaluations}};
  j["initial_misfit"] = r.initial_misfit;
  j["final_misfit"] = r.record.rows.back().misfit;
  j["lambda_tv"] = r.lambda_tv;
  j["truth_checksum"] = sum.truth_checksum;
  j["final_checksum"] = field_checksum(r.model);
  j["deterministic"] = cfg.inversion.deterministic;
  j["threads"] = cfg.solver.threads;
  j["pml_velocity"] = prep.problem.solver.pml_velocity;
  j["config"] = echo_config(cfg);
  j["started"] = started;
  j["finished"] = utc_now();
  write_text(out_dir / "manifest.json", j.dump(2) + "\n");
  return sum;
}

namespace {

struct CsvRun {
  std::vector<double> step, misfit, rel, ssim, rank;
  std::optional<double> last_rel, last_ssim;
};

std::optional<double> field(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

CsvRun read_convergence(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("missing " + p.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("step,misfit,rel_l2,ssim,rank", 0) != 0)
    throw IoError(p.string() + ": unexpected header '" + line + "'");
  CsvRun run;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (line.back() == ',') f.emplace_back();
    if (f.size() < 5) throw IoError(p.string() + ": short row '" + line + "'");
    try {
      run.step.push_back(std::stod(f[0]));
      run.misfit.push_back(std::stod(f[1]));
      run.last_rel = field(f[2]);
      run.last_ssim = field(f[3]);
      run.rel.push_back(run.last_rel.value_or(std::numeric_limits<double>::quiet_NaN()));
      run.ssim.push_back(run.last_ssim.value_or(std::numeric_limits<double>::quiet_NaN()));
      run.rank.push_back(std::stod(f[4]));
    } catch (const std::logic_error&) {
      throw IoError(p.string() + ": bad row '" + line + "'");
    }
  }
  if (run.step.empty()) throw IoError(p.string() + ": no rows");
  return run;
}

json read_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("no manifest in " + dir.string() + " (missing or partial run)");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(dir.string() + "/manifest.json: " + e.what());
  }
}

std::string opt_str(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream o;
  o.precision(17);
  o << *v;
  return o.str();
}

}  // namespace

std::vector<ComparisonRow> compare_runs(const std::vector<fs::path>& dirs, const fs::path& out_dir) {
  if (dirs.empty()) throw InvalidArgument("compare needs at least one run directory");
  std::vector<ComparisonRow> rows;
  std::vector<Series> misfit, rel, rank;
  std::optional<std::uint64_t> checksum;
  for (const auto& d : dirs) {
    const json m = read_manifest(d);
    if (m.contains("truth_checksum") && !m["truth_checksum"].is_null()) {
      const auto c = m["truth_checksum"].get<std::uint64_t>();
      if (checksum && *checksum != c)
        throw InvalidArgument("run " + d.string() +
                              " has a different truth model; the runs are not comparable");
      checksum = c;
    }
    const CsvRun run = read_convergence(d / "convergence.csv");
    ComparisonRow row;
    row.method = m.value("method", std::string("?"));
    row.dir = d.string();
    row.rel_l2 = run.last_rel;
    row.ssim = run.last_ssim;
    row.final_misfit = run.misfit.back();
    row.rank = static_cast<int>(run.rank.back());
    rows.push_back(row);
    const std::string label = row.method + " (" + d.filename().string() + ")";
    misfit.push_back({label, run.step, run.misfit});
    rel.push_back({label, run.step, run.rel});
    rank.push_back({label, run.step, run.rank});
  }

  make_dirs(out_dir);
  std::ofstream out(out_dir / "compare.csv");
  if (!out) throw IoError("cannot write " + (out_dir / "compare.csv").string());
  out.precision(17);
  out << "method,rel_l2,ssim,final_misfit,rank\n";
  for (const auto& r : rows)
    out << r.method << ',' << opt_str(r.rel_l2) << ',' << opt_str(r.ssim) << ',' << r.final_misfit
        << ',' << r.rank << '\n';
  if (!out) throw IoError("write failed for compare.csv");
  write_line_plot(out_dir / "misfit.svg", "Data misfit", "physics step", "misfit", misfit, true);
  write_line_plot(out_dir / "rel_l2.svg", "Relative L2 error", "physics step", "rel_l2", rel);
  write_line_plot(out_dir / "rank.svg", "Effective rank", "physics step", "rank", rank);
  return rows;
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& cfg,
                                      const std::vector<std::pair<int, int>>& pairs,
                                      const fs::path& out_dir) {
  const PreparedProblem prep = prepare_problem(cfg);
  InversionConfig c = cfg.inversion;
  c.method = Method::Sfm;
  const auto rows = ablation_grid(c, prep.init, prep.problem, pairs);
  make_dirs(out_dir);
  write_ablation_csv(out_dir / "ablation.csv", rows);
  return rows;
}

}  // namespace sfwi::harness
