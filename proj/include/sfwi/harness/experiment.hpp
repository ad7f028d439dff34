#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sfwi/harness/benchmarks.hpp"
#include "sfwi/inversion/inversion.hpp"

namespace sfwi::harness {

enum class ScenarioKind { Clean, PoorInit, Noisy, SparseShots };
enum class InitKind { Smoothed, Linear };

std::string scenario_name(ScenarioKind k);
ScenarioKind parse_scenario(const std::string& s);

struct Scenario {
  ScenarioKind kind = ScenarioKind::Clean;
  double snr_db = 3.5;       // noisy only
  int n_keep_shots = 5;      // sparse_shots only
  InitKind init = InitKind::Smoothed;
  double smooth_sigma = 6.0; // cells
  std::optional<double> v_top;     // linear init; default is the truth's top-row mean
  std::optional<double> v_bottom;  // and bottom-row mean
  std::optional<std::uint64_t> noise_seed;  // default: run seed + 1
};

/// Everything one run needs. Defaults describe the two_layer desk setup.
struct ExperimentConfig {
  // [grid]
  int nx = 64;
  int nz = 64;
  double dx = 10.0;
  double dz = 10.0;
  BenchmarkKind benchmark = BenchmarkKind::TwoLayer;
  std::uint64_t model_seed = 0;
  std::string truth_path;  // optional .sfwi file; replaces the generator

  // [acquisition]
  int n_shots = 8;
  int n_receivers = 64;
  int source_depth = 1;    // cells
  int receiver_depth = 1;
  double f0 = 10.0;        // Hz
  std::optional<double> t0;  // s; default 1.5/f0

  // [solver]
  SolverConfig solver;

  // [method]
  InversionConfig inversion;

  // [scenario]
  Scenario scenario;

  // [output]
  std::string out_dir = "run";
  int snapshot_every = 0;  // physics steps; 0 snapshots every recorded row
  bool snapshots = true;

  Grid2D grid() const { return Grid2D(nx, nz, dx, dz); }
  double source_delay() const { return t0 ? *t0 : 1.5 / f0; }
};

/// INI text with sections grid, acquisition, solver, method, scenario,
/// output. Unknown keys and bad values are collected and thrown together as
/// ConfigError. Scenario presets only change defaults; explicit keys win.
ExperimentConfig parse_config(const std::string& ini_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved configuration as INI; parse_config(echo_config(c)) == c.
std::string echo_config(const ExperimentConfig& cfg);

/// Truth, start model, observed data and the problem handed to the drivers.
struct PreparedProblem {
  VelocityModel truth;
  VelocityModel init;
  ShotGather clean;  // noise-free data on the kept shots
  InversionProblem problem;
};

PreparedProblem prepare_problem(const ExperimentConfig& cfg);

struct RunSummary {
  std::filesystem::path dir;
  InversionResult result;
  std::uint64_t truth_checksum = 0;
};

/// Writes config.echo, truth.sfwi, init.sfwi, gathers/{clean,observed}.sgth,
/// snaps/snap_<step>.sfwi, convergence.csv, final.sfwi and, last,
/// manifest.json. A directory without a manifest is a partial run.
RunSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct ComparisonRow {
  std::string method;
  std::string dir;
  std::optional<double> rel_l2;
  std::optional<double> ssim;
  double final_misfit = 0.0;
  int rank = 0;
};

/// Reads manifest.json and convergence.csv from each run directory and writes
/// compare.csv plus misfit, rel_l2 and rank plots (SVG) into out_dir. Runs
/// with different truth checksums are rejected.
std::vector<ComparisonRow> compare_runs(const std::vector<std::filesystem::path>& dirs,
                                        const std::filesystem::path& out_dir);

/// SFM (T,K) sweep on the configured problem; writes ablation.csv.
std::vector<AblationRow> run_ablation(const ExperimentConfig& cfg,
                                      const std::vector<std::pair<int, int>>& pairs,
                                      const std::filesystem::path& out_dir);

/// "10x30,30x10" -> {(10,30),(30,10)}.
std::vector<std::pair<int, int>> parse_pairs(const std::string& s);

}  // namespace sfwi::harness
