#include "sfwi/inversion/inversion.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "sfwi/metrics/metrics.hpp"

namespace sfwi {

std::string method_name(Method m) {
  switch (m) {
    case Method::Fwi: return "FWI";
    case Method::FwiTv: return "FWI_TV";
    case Method::Dip: return "DIP";
    case Method::Sfm: return "SFM";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  std::string u = s;
  for (char& c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (u == "FWI") return Method::Fwi;
  if (u == "FWI_TV" || u == "TV") return Method::FwiTv;
  if (u == "DIP") return Method::Dip;
  if (u == "SFM") return Method::Sfm;
  throw InvalidArgument("unknown method '" + s + "' (expected FWI, FWI_TV, DIP or SFM)");
}

void SfmConfig::validate() const {
  if (outer_steps < 2)
    throw InvalidArgument("SFM needs at least 2 outer steps (t = s/(T-1)), got " +
                          std::to_string(outer_steps));
  if (inner_steps < 1) throw InvalidArgument("SFM inner steps must be >= 1");
}

void InversionConfig::validate() const {
  if (total_physics_steps < 1) throw InvalidArgument("total_physics_steps must be >= 1");
  if (!(lr_model > 0.0) || !(lr_net > 0.0)) throw InvalidArgument("learning rates must be positive");
  if (!(weight_decay_net >= 0.0)) throw InvalidArgument("weight_decay_net must be >= 0");
  if (!(lambda_tv >= 0.0)) throw InvalidArgument("lambda_tv must be >= 0");
  if (!(lambda_factor > 0.0)) throw InvalidArgument("lambda_factor must be positive");
  if (!(tv_epsilon > 0.0)) throw InvalidArgument("tv_epsilon must be positive");
  if (record_every < 1) throw InvalidArgument("record_every must be >= 1");
  if (warm_start_steps < 0) throw InvalidArgument("warm_start_steps must be >= 0");
  if (!(net_velocity_scale > 0.0)) throw InvalidArgument("net_velocity_scale must be positive");
  bounds.validate();
  if (method == Method::Sfm) {
    sfm.validate();
    if (static_cast<long>(sfm.outer_steps) * sfm.inner_steps != total_physics_steps)
      throw InvalidArgument("SFM budget mismatch: T*K = " + std::to_string(sfm.outer_steps) + "*" +
                            std::to_string(sfm.inner_steps) + " != total_physics_steps " +
                            std::to_string(total_physics_steps));
  }
  if (method == Method::Dip || method == Method::Sfm) arch.validate();
}

void ConvergenceRecord::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "step,misfit,rel_l2,ssim,rank,seconds\n";
  for (const auto& r : rows) {
    out << r.step << ',' << r.misfit << ',';
    if (r.rel_l2) out << *r.rel_l2;
    out << ',';
    if (r.ssim) out << *r.ssim;
    out << ',' << r.rank << ',' << r.seconds << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

using Clock = std::chrono::steady_clock;

// Gradient and misfit evaluations with counting and step-tagged errors.
class Physics {
 public:
  Physics(const InversionProblem& p, const VelocityModel& model0, EvaluationCounter& counter)
      : p_(p), solver_(p.solver), counter_(counter) {
    if (solver_.pml_velocity <= 0.0) solver_.pml_velocity = max_value(model0);
  }

  template <class F>
  static std::invoke_result_t<F> tagged(int step, F&& f) {
    const std::string at = "physics step " + std::to_string(step) + ": ";
    try {
      return f();
    } catch (const StabilityError& e) {
      throw StabilityError(at + e.what(), e.required_dt());
    } catch (const NumericError& e) {
      throw NumericError(at + e.what());
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(at + e.what());
    }
  }

  MisfitGradient gradient(const VelocityModel& m, int step) {
    return tagged(step, [&] {
      ++counter_.gradient_evaluations;
      return model_gradient(m, p_.geometry, p_.wavelet, p_.observed, solver_);
    });
  }

  double misfit(const VelocityModel& m, int step) {
    return tagged(step, [&] {
      ++counter_.forward_evaluations;
      return data_misfit(simulate_shots(m, p_.geometry, p_.wavelet, solver_), p_.observed);
    });
  }

 private:
  const InversionProblem& p_;
  SolverConfig solver_;
  EvaluationCounter& counter_;
};

class Recorder {
 public:
  Recorder(const InversionConfig& cfg, const InversionProblem& p, const InversionHooks& hooks,
           ConvergenceRecord& rec)
      : cfg_(cfg), p_(p), hooks_(hooks), rec_(rec), start_(Clock::now()) {}

  bool due(int step) const { return step % cfg_.record_every == 0; }

  void add(int step, double misfit, const VelocityModel& emitted) {
    if (!std::isfinite(misfit)) throw NumericError("non-finite misfit at physics step " + std::to_string(step));
    ConvergenceRow r;
    r.step = step;
    r.misfit = misfit;
    if (p_.truth) {
      r.rel_l2 = rel_l2(emitted, *p_.truth);
      r.ssim = ssim(emitted, *p_.truth);
    }
    r.rank = effective_rank(emitted);
    r.seconds = cfg_.deterministic ? 0.0 : std::chrono::duration<double>(Clock::now() - start_).count();
    rec_.rows.push_back(r);
    if (hooks_.on_record) hooks_.on_record(step, emitted);
  }

 private:
  const InversionConfig& cfg_;
  const InversionProblem& p_;
  const InversionHooks& hooks_;
  ConvergenceRecord& rec_;
  Clock::time_point start_;
};

VelocityModel emit(const Grid2D& g, std::vector<double> v, const Bounds& b) {
  project_bounds(v, b);
  return VelocityModel(g, std::move(v));
}

std::vector<AdamW::Block> blocks_of(ad::FlowNetwork& net) {
  std::vector<AdamW::Block> out;
  for (auto& p : net.params()) out.push_back({p.name, p.value, p.grad});
  return out;
}

AdamWConfig net_optimizer(const InversionConfig& cfg) {
  AdamWConfig o;
  o.lr = cfg.lr_net;
  o.weight_decay = cfg.weight_decay_net;
  return o;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Shared loop of the model-space methods; lambda > 0 adds the TV term.
InversionResult model_space(const InversionConfig& cfg, const VelocityModel& model0,
                            const InversionProblem& problem, const InversionHooks& hooks,
                            bool with_tv) {
  cfg.validate();
  InversionResult res{project_bounds(model0, cfg.bounds), {}, {}, 0.0, 0.0};
  Physics phys(problem, model0, res.counter);
  Recorder rec(cfg, problem, hooks, res.record);
  AdamWState opt({cfg.lr_model, 0.9, 0.999, 1e-8, 0.0}, model0.size());
  double lambda = with_tv ? cfg.lambda_tv : 0.0;

  VelocityModel& m = res.model;
  for (int step = 0; step < cfg.total_physics_steps; ++step) {
    MisfitGradient mg = phys.gradient(m, step);
    if (step == 0) {
      res.initial_misfit = mg.misfit;
      if (with_tv && cfg.auto_lambda) {
        const double tv0 = tv_value_and_grad(m, cfg.tv_epsilon).value;
        lambda = mg.misfit / tv0 * cfg.lambda_factor;
      }
    }
    if (rec.due(step)) rec.add(step, mg.misfit, m);
    if (lambda > 0.0) {
      const TvResult tv = tv_value_and_grad(m, cfg.tv_epsilon);
      for (std::size_t i = 0; i < m.size(); ++i) mg.grad[i] += lambda * tv.grad[i];
    }
    adamw_step(opt, m.values(), mg.grad.values(), "velocity");
    project_bounds(m.values(), cfg.bounds);
  }
  rec.add(cfg.total_physics_steps, phys.misfit(m, cfg.total_physics_steps), m);
  res.lambda_tv = lambda;
  return res;
}

double sfm_time(int s, int outer_steps) {
  return static_cast<double>(s) / static_cast<double>(outer_steps - 1);
}

std::vector<double> flow_proposal(std::span<const double> m_t, std::span<const double> v,
                                  double t) {
  std::vector<double> out(m_t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m_t[i] + (1.0 - t) * v[i];
  return out;
}

}  // namespace

InversionResult run_conventional_fwi(const InversionConfig& cfg, const VelocityModel& model0,
                                     const InversionProblem& problem,
                                     const InversionHooks& hooks) {
  return model_space(cfg, model0, problem, hooks, false);
}

InversionResult run_tv_fwi(const InversionConfig& cfg, const VelocityModel& model0,
                           const InversionProblem& problem, const InversionHooks& hooks) {
  return model_space(cfg, model0, problem, hooks, true);
}

std::vector<double> fit_network(ad::FlowNetwork& net, std::span<const double> input,
                                std::span<const double> target, int nz, int nx, double t,
                                int steps, const AdamWConfig& opt) {
  if (input.size() != target.size())
    throw InvalidArgument("fit_network: input and target sizes differ");
  AdamW adam(opt);
  std::vector<double> losses;
  std::vector<double> cot(target.size());
  for (int i = 0; i < steps; ++i) {
    ad::Tape tape;
    const ad::Tensor y = net.forward(tape, input, nz, nx, t);
    auto yv = y.values();
    double loss = 0.0;
    for (std::size_t j = 0; j < cot.size(); ++j) {
      const double r = yv[j] - target[j];
      loss += r * r;
      cot[j] = 2.0 * r;
    }
    losses.push_back(loss);
    net.zero_grad();
    tape.backward(y, cot);
    adam.step(blocks_of(net));
  }
  losses.push_back(ad::squared_distance(net.evaluate(input, nz, nx, t), target));
  return losses;
}

InversionResult run_dip_fwi(const InversionConfig& cfg, const VelocityModel& model0,
                            const InversionProblem& problem, const InversionHooks& hooks) {
  cfg.validate();
  const Grid2D& g = model0.grid();
  const int nz = g.nz(), nx = g.nx();
  ad::Architecture arch = cfg.arch;
  arch.input_offset = 0.0;
  arch.input_scale = 1.0;
  arch.output_offset = mean_of(model0.values());
  arch.output_scale = cfg.net_velocity_scale;
  ad::FlowNetwork net(arch, cfg.seed);

  // Fixed network input, held for the whole run.
  std::vector<double> z(g.size());
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : z) v = normal(rng);

  const AdamWConfig opt = net_optimizer(cfg);
  if (cfg.warm_start_steps > 0)
    fit_network(net, z, model0.values(), nz, nx, 0.0, cfg.warm_start_steps, opt);

  InversionResult res{model0, {}, {}, 0.0, 0.0};
  Physics phys(problem, model0, res.counter);
  Recorder rec(cfg, problem, hooks, res.record);
  AdamW adam(opt);
  for (int step = 0; step < cfg.total_physics_steps; ++step) {
    ad::Tape tape;
    const ad::Tensor out = net.forward(tape, z, nz, nx, 0.0);
    const VelocityModel m(g, std::vector<double>(out.values().begin(), out.values().end()));
    const MisfitGradient mg = phys.gradient(m, step);
    if (step == 0) res.initial_misfit = mg.misfit;
    if (rec.due(step)) rec.add(step, mg.misfit, emit(g, {m.values().begin(), m.values().end()}, cfg.bounds));
    net.zero_grad();
    tape.backward(out, mg.grad.values());
    adam.step(blocks_of(net));
  }
  res.model = emit(g, net.evaluate(z, nz, nx, 0.0), cfg.bounds);
  rec.add(cfg.total_physics_steps, phys.misfit(res.model, cfg.total_physics_steps), res.model);
  return res;
}

SfmStep sfm_proposal(const ad::FieldMap& v, std::span<const double> m0,
                     std::span<const double> m1_hat, int s, int outer_steps) {
  SfmConfig{outer_steps, 1}.validate();
  if (s < 0 || s >= outer_steps) throw InvalidArgument("outer index out of range");
  SfmStep out;
  out.t = sfm_time(s, outer_steps);
  out.m_t = ad::interpolate_path(m0, m1_hat, out.t);
  out.proposal = flow_proposal(out.m_t, v(out.m_t, out.t), out.t);
  return out;
}

InversionResult run_sfm_fwi(const InversionConfig& cfg, const VelocityModel& model0,
                            const InversionProblem& problem, const InversionHooks& hooks) {
  InversionConfig c = cfg;
  c.method = Method::Sfm;
  c.validate();
  const Grid2D& g = model0.grid();
  const int nz = g.nz(), nx = g.nx();
  const int T = c.sfm.outer_steps, K = c.sfm.inner_steps;

  ad::Architecture arch = c.arch;
  arch.input_offset = mean_of(model0.values());
  arch.input_scale = c.net_velocity_scale;
  arch.output_offset = 0.0;
  arch.output_scale = c.net_velocity_scale;
  ad::FlowNetwork net(arch, c.seed);

  const std::vector<double> m0(model0.values().begin(), model0.values().end());
  const AdamWConfig opt = net_optimizer(c);
  if (c.warm_start_steps > 0) fit_network(net, m0, m0, nz, nx, 0.0, c.warm_start_steps, opt);

  InversionResult res{model0, {}, {}, 0.0, 0.0};
  Physics phys(problem, model0, res.counter);
  Recorder rec(c, problem, hooks, res.record);
  AdamW adam(opt);
  std::vector<double> m1_hat = m0;
  std::vector<double> cot(m0.size());
  int step = 0;
  for (int s = 0; s < T; ++s) {
    const double t = sfm_time(s, T);
    const std::vector<double> m_t = ad::interpolate_path(m0, m1_hat, t);
    std::vector<double> last;
    for (int k = 0; k < K; ++k, ++step) {
      ad::Tape tape;
      const ad::Tensor v = net.forward(tape, m_t, nz, nx, t);
      std::vector<double> proposal = flow_proposal(m_t, v.values(), t);
      const VelocityModel pm(g, proposal);
      const MisfitGradient mg = phys.gradient(pm, step);
      if (step == 0) res.initial_misfit = mg.misfit;
      if (rec.due(step)) rec.add(step, mg.misfit, emit(g, proposal, c.bounds));
      for (std::size_t i = 0; i < cot.size(); ++i) cot[i] = (1.0 - t) * mg.grad[i];
      net.zero_grad();
      tape.backward(v, cot);
      adam.step(blocks_of(net));
      last = std::move(proposal);
    }
    m1_hat = c.sfm.recompute_target ? flow_proposal(m_t, net.evaluate(m_t, nz, nx, t), t)
                                    : std::move(last);
  }
  res.model = emit(g, m1_hat, c.bounds);
  rec.add(step, phys.misfit(res.model, step), res.model);
  return res;
}

InversionResult run_inversion(const InversionConfig& cfg, const VelocityModel& model0,
                              const InversionProblem& problem, const InversionHooks& hooks) {
  switch (cfg.method) {
    case Method::Fwi: return run_conventional_fwi(cfg, model0, problem, hooks);
    case Method::FwiTv: return run_tv_fwi(cfg, model0, problem, hooks);
    case Method::Dip: return run_dip_fwi(cfg, model0, problem, hooks);
    case Method::Sfm: return run_sfm_fwi(cfg, model0, problem, hooks);
  }
  throw InvalidArgument("unknown method");
}

std::vector<AblationRow> ablation_grid(const InversionConfig& cfg, const VelocityModel& model0,
                                       const InversionProblem& problem,
                                       const std::vector<std::pair<int, int>>& pairs) {
  if (!problem.truth) throw InvalidArgument("ablation needs a truth model for its metrics");
  for (const auto& [T, K] : pairs)
    if (static_cast<long>(T) * K != cfg.total_physics_steps)
      throw InvalidArgument("ablation pair (" + std::to_string(T) + "," + std::to_string(K) +
                            ") has T*K = " + std::to_string(static_cast<long>(T) * K) +
                            ", budget is " + std::to_string(cfg.total_physics_steps));
  std::vector<AblationRow> rows;
  for (const auto& [T, K] : pairs) {
    InversionConfig c = cfg;
    c.method = Method::Sfm;
    c.sfm.outer_steps = T;
    c.sfm.inner_steps = K;
    const InversionResult r = run_sfm_fwi(c, model0, problem);
    rows.push_back({T, K, rel_l2(r.model, *problem.truth), ssim(r.model, *problem.truth),
                    r.record.rows.back().misfit});
  }
  return rows;
}

void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "pair,T,K,rel_l2,ssim,final_misfit\n";
  for (const auto& r : rows)
    out << '"' << r.outer_steps << 'x' << r.inner_steps << "\"," << r.outer_steps << ','
        << r.inner_steps << ',' << r.rel_l2 << ',' << r.ssim << ',' << r.final_misfit << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace sfwi
