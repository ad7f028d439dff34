#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sfwi/ad/flow_net.hpp"
#include "sfwi/optim/optim.hpp"
#include "sfwi/wave/solver.hpp"

namespace sfwi {

enum class Method { Fwi, FwiTv, Dip, Sfm };

std::string method_name(Method m);
/// Accepts FWI, FWI_TV, DIP, SFM (case-insensitive).
Method parse_method(const std::string& s);

struct SfmConfig {
  int outer_steps = 30;   // T
  int inner_steps = 100;  // K
  /// Final target update recomputes v(m_t, t) with the updated network;
  /// false reuses the last inner proposal instead.
  bool recompute_target = true;

  void validate() const;
};

struct InversionConfig {
  Method method = Method::Fwi;
  int total_physics_steps = 300;
  double lr_model = 10.0;       // m/s, AdamW on velocity values
  double lr_net = 2e-4;         // AdamW on network parameters
  double weight_decay_net = 1e-4;
  double lambda_tv = 0.0;
  bool auto_lambda = false;     // lambda = misfit0 / TV0 * lambda_factor
  double lambda_factor = 1e-2;
  double tv_epsilon = 1e-3;
  Bounds bounds{1400.0, 5000.0};
  std::uint64_t seed = 0;
  int record_every = 10;
  int warm_start_steps = 0;     // SFM and DIP only
  bool deterministic = true;    // zero the wall-clock column
  SfmConfig sfm;
  ad::Architecture arch;        // DIP and SFM; offsets/scales are filled in by the driver
  double net_velocity_scale = 1000.0;  // m/s per unit of network output

  void validate() const;
};

/// Everything the misfit depends on besides the model.
struct InversionProblem {
  AcquisitionGeometry geometry;
  RickerWavelet wavelet;
  ShotGather observed;
  SolverConfig solver;
  std::optional<VelocityModel> truth;  // enables rel_l2 and ssim columns
};

struct ConvergenceRow {
  int step = 0;
  double misfit = 0.0;
  std::optional<double> rel_l2;
  std::optional<double> ssim;
  int rank = 0;
  double seconds = 0.0;
  bool operator==(const ConvergenceRow&) const = default;
};

struct ConvergenceRecord {
  std::vector<ConvergenceRow> rows;

  /// Header: step,misfit,rel_l2,ssim,rank,seconds. Absent metrics are empty fields.
  void write_csv(const std::filesystem::path& path) const;
  bool operator==(const ConvergenceRecord&) const = default;
};

struct EvaluationCounter {
  long gradient_evaluations = 0;  // forward + adjoint
  long forward_evaluations = 0;   // forward only (final-model recording)
};

struct InversionResult {
  VelocityModel model;
  ConvergenceRecord record;
  EvaluationCounter counter;
  double lambda_tv = 0.0;
  double initial_misfit = 0.0;
};

struct InversionHooks {
  /// Called for every recorded row with the emitted (bounds-projected) model.
  std::function<void(int step, const VelocityModel& emitted)> on_record;
};

InversionResult run_conventional_fwi(const InversionConfig& cfg, const VelocityModel& model0,
                                     const InversionProblem& problem,
                                     const InversionHooks& hooks = {});
InversionResult run_tv_fwi(const InversionConfig& cfg, const VelocityModel& model0,
                           const InversionProblem& problem, const InversionHooks& hooks = {});
InversionResult run_dip_fwi(const InversionConfig& cfg, const VelocityModel& model0,
                            const InversionProblem& problem, const InversionHooks& hooks = {});
InversionResult run_sfm_fwi(const InversionConfig& cfg, const VelocityModel& model0,
                            const InversionProblem& problem, const InversionHooks& hooks = {});

/// Dispatches on cfg.method.
InversionResult run_inversion(const InversionConfig& cfg, const VelocityModel& model0,
                              const InversionProblem& problem, const InversionHooks& hooks = {});

/// Pieces of one SFM inner step, exposed for testing the interpolation
/// identities.
struct SfmStep {
  double t;
  std::vector<double> m_t;
  std::vector<double> proposal;
};
/// t = s/(T-1), m_t = (1-t) m0 + t m1_hat, proposal = m_t + (1-t) v(m_t, t).
SfmStep sfm_proposal(const ad::FieldMap& v, std::span<const double> m0,
                     std::span<const double> m1_hat, int s, int outer_steps);

/// Trains `net` for `steps` AdamW updates on ||net(input, t) - target||^2.
/// Returns the loss before each update followed by the final loss.
std::vector<double> fit_network(ad::FlowNetwork& net, std::span<const double> input,
                                std::span<const double> target, int nz, int nx, double t,
                                int steps, const AdamWConfig& opt);

struct AblationRow {
  int outer_steps;
  int inner_steps;
  double rel_l2;
  double ssim;
  double final_misfit;
};

/// One SFM run per (T,K) pair under a shared budget; rejects pairs whose
/// product differs from cfg.total_physics_steps.
std::vector<AblationRow> ablation_grid(const InversionConfig& cfg, const VelocityModel& model0,
                                       const InversionProblem& problem,
                                       const std::vector<std::pair<int, int>>& pairs);
void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows);

}  // namespace sfwi
