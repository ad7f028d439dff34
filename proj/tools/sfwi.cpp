// sfwi: command-line front end for the inversion toolkit.
//
// Exit codes: 0 success, 2 invalid configuration or arguments, 3 numeric
// failure (instability, divergence, non-finite gradients), 4 I/O.

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "sfwi/core/io.hpp"
#include "sfwi/harness/experiment.hpp"
#include "sfwi/metrics/metrics.hpp"

using namespace sfwi;
using namespace sfwi::harness;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool deterministic = false;
};

ExperimentConfig load(const Globals& g) {
  ExperimentConfig c = g.config.empty() ? parse_config("") : load_config(g.config);
  if (g.seed) c.inversion.seed = *g.seed;
  if (g.threads) {
    if (*g.threads < 1) throw ConfigError({"--threads must be >= 1"});
    c.solver.threads = *g.threads;
  }
  if (g.deterministic) {
    c.inversion.deterministic = true;
    c.solver.threads = 1;
  }
  if (!g.out.empty()) c.out_dir = g.out;
  return c;
}

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-flow-matching assisted acoustic FWI toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Experiment INI file");
  app.add_option("--out", g.out, "Output directory (or file for gen-model)");
  app.add_option("--seed", g.seed, "Run seed (network init, noise)");
  app.add_option("--threads", g.threads, "Shots simulated concurrently");
  app.add_flag("--deterministic", g.deterministic,
               "Single thread and zeroed wall-clock column, for bit-identical reruns");

  auto* forward = app.add_subcommand("forward", "Simulate observed data for the configured truth model");

  auto* invert = app.add_subcommand("invert", "Run one inversion and write its artifacts");

  std::string model_path, truth_path;
  auto* metrics = app.add_subcommand("metrics", "rel_l2, SSIM and effective rank of a model");
  metrics->add_option("model", model_path, "Model .sfwi")->required();
  metrics->add_option("--truth", truth_path, "Reference model .sfwi");

  std::string corrupt_path, corrected_path;
  DeblurBands bands;
  auto* deblur = app.add_subcommand("deblur", "Spectral sharpness ratios of corrected over corrupt");
  deblur->add_option("corrupt", corrupt_path, "Blurred model .sfwi")->required();
  deblur->add_option("corrected", corrected_path, "Corrected model .sfwi")->required();
  deblur->add_option("--band-lo", bands.band_lo, "Band start, cycles/m");
  deblur->add_option("--band-hi", bands.band_hi, "Band end, cycles/m");
  deblur->add_option("--k-cut", bands.k_cut, "High-wavenumber cut, cycles/m");

  std::vector<std::string> run_dirs;
  auto* compare = app.add_subcommand("compare", "Tabulate and plot finished runs");
  compare->add_option("dirs", run_dirs, "Run directories")->required();

  std::string pairs = "2x150,10x30,30x10";
  auto* ablate = app.add_subcommand("ablate", "SFM (T,K) sweep under a fixed budget");
  ablate->add_option("--pairs", pairs, "Comma-separated TxK list");

  std::string kind = "two_layer";
  int nx = 64, nz = 64;
  double dx = 10.0, dz = 10.0;
  std::uint64_t model_seed = 0;
  auto* gen = app.add_subcommand("gen-model", "Write a synthetic benchmark model");
  gen->add_option("--kind", kind, "two_layer, three_layer, lens or random_layers");
  gen->add_option("--nx", nx);
  gen->add_option("--nz", nz);
  gen->add_option("--dx", dx);
  gen->add_option("--dz", dz);
  gen->add_option("--model-seed", model_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (forward->parsed()) {
      const ExperimentConfig c = load(g);
      const fs::path out = c.out_dir;
      const PreparedProblem p = prepare_problem(c);
      fs::create_directories(out / "gathers");
      save_field(out / "truth.sfwi", p.truth);
      save_gather(out / "gathers" / "clean.sgth", p.clean);
      save_gather(out / "gathers" / "observed.sgth", p.problem.observed);
      print_json({{"out", out.string()},
                  {"shots", p.clean.n_shots()},
                  {"receivers", p.clean.n_receivers()},
                  {"nt", p.clean.nt()},
                  {"truth_checksum", field_checksum(p.truth)}});
    } else if (invert->parsed()) {
      const ExperimentConfig c = load(g);
      const RunSummary s = run_experiment(c, c.out_dir);
      const auto& last = s.result.record.rows.back();
      nlohmann::json j{{"out", s.dir.string()},
                       {"method", method_name(c.inversion.method)},
                       {"gradient_evaluations", s.result.counter.gradient_evaluations},
                       {"initial_misfit", s.result.initial_misfit},
                       {"final_misfit", last.misfit},
                       {"rank", last.rank}};
      if (last.rel_l2) j["rel_l2"] = *last.rel_l2;
      if (last.ssim) j["ssim"] = *last.ssim;
      print_json(j);
    } else if (metrics->parsed()) {
      const VelocityModel m = load_field(model_path);
      nlohmann::json j{{"effective_rank", effective_rank(m)}};
      if (!truth_path.empty()) {
        const VelocityModel t = load_field(truth_path);
        j["rel_l2"] = rel_l2(m, t);
        j["ssim"] = ssim(m, t);
      }
      print_json(j);
    } else if (deblur->parsed()) {
      const SpectralReport r = deblur_report(load_field(corrupt_path), load_field(corrected_path), bands);
      if (!g.out.empty()) {
        fs::create_directories(fs::path(g.out));
        write_spectral_csv(fs::path(g.out) / "spectrum.csv", r);
      }
      print_json({{"R_band", r.r_band},
                  {"hf_gain", r.hf_gain},
                  {"grad_energy_gain", r.grad_energy_gain},
                  {"p90_grad_gain", r.p90_grad_gain}});
    } else if (compare->parsed()) {
      std::vector<fs::path> dirs(run_dirs.begin(), run_dirs.end());
      const fs::path out = g.out.empty() ? fs::path("compare") : fs::path(g.out);
      const auto rows = compare_runs(dirs, out);
      nlohmann::json j = nlohmann::json::array();
      for (const auto& r : rows) {
        nlohmann::json row{{"method", r.method}, {"dir", r.dir}, {"final_misfit", r.final_misfit},
                           {"rank", r.rank}};
        row["rel_l2"] = r.rel_l2 ? nlohmann::json(*r.rel_l2) : nlohmann::json();
        row["ssim"] = r.ssim ? nlohmann::json(*r.ssim) : nlohmann::json();
        j.push_back(row);
      }
      print_json(j);
    } else if (ablate->parsed()) {
      const ExperimentConfig c = load(g);
      const auto rows = run_ablation(c, parse_pairs(pairs), c.out_dir);
      nlohmann::json j = nlohmann::json::array();
      for (const auto& r : rows)
        j.push_back({{"T", r.outer_steps}, {"K", r.inner_steps}, {"rel_l2", r.rel_l2},
                     {"ssim", r.ssim}, {"final_misfit", r.final_misfit}});
      print_json(j);
    } else if (gen->parsed()) {
      if (g.out.empty()) throw ConfigError({"gen-model needs --out <file.sfwi>"});
      const VelocityModel m =
          generate_synthetic_benchmark(parse_benchmark(kind), Grid2D(nx, nz, dx, dz), model_seed);
      save_field(g.out, m);
      print_json({{"out", g.out}, {"checksum", field_checksum(m)}, {"rank", effective_rank(m)}});
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ResourceError& e) {
    std::cerr << "error: " << e.what() << " (try solver.checkpoint_interval = "
              << e.suggested_checkpoint_interval() << ")\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const FormatError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
