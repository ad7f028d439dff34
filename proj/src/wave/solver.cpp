#include "sfwi/wave/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sfwi/simd/kernels.hpp"

namespace sfwi {

namespace {

// 8th-order central weights.
constexpr std::array<double, 4> kFirst = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
constexpr std::array<double, 5> kSecond = {-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0,
                                           -1.0 / 560.0};
constexpr int kHalo = 4;
constexpr int kCheckEvery = 64;

struct Profile {
  std::vector<double> a;
  std::vector<double> b;
};

// Quadratic damping with a linearly decaying frequency shift. Cells outside
// the layer get a = 1, b = 0 so the memory variables stay identically zero.
Profile pml_profile(int n_padded, int width, double spacing, double dt, double velocity,
                    double reflection, double frequency) {
  Profile p{std::vector<double>(n_padded, 1.0), std::vector<double>(n_padded, 0.0)};
  const double thickness = width * spacing;
  const double sigma_max = -3.0 * velocity * std::log(reflection) / (2.0 * thickness);
  const double alpha_max = std::numbers::pi * frequency;
  for (int i = 0; i < n_padded; ++i) {
    double depth = 0.0;
    if (i < width)
      depth = static_cast<double>(width - i) / width;
    else if (i > n_padded - 1 - width)
      depth = static_cast<double>(i - (n_padded - 1 - width)) / width;
    if (depth <= 0.0) continue;
    const double sigma = sigma_max * depth * depth;
    const double alpha = alpha_max * (1.0 - depth);
    p.a[i] = std::exp(-(sigma + alpha) * dt);
    p.b[i] = sigma / (sigma + alpha) * (p.a[i] - 1.0);
  }
  return p;
}

// Padded array with a zero halo; active cell (z, x) lives at
// (z + kHalo) * pitch + x + kHalo.
struct Layout {
  int nx;  // active (padded-model) extent
  int nz;
  std::ptrdiff_t pitch;
  std::size_t total;
  std::size_t cells() const { return static_cast<std::size_t>(nx) * nz; }
  std::size_t row(int z) const { return static_cast<std::size_t>(z + kHalo) * pitch + kHalo; }
  std::size_t at(int z, int x) const { return row(z) + x; }
};

struct Segment {
  int x0, x1;
  bool pml;
};

// Everything one shot needs, shared read-only across shots.
struct Setup {
  Grid2D grid;
  int width;
  Layout lay;
  std::array<double, 4> cx1, cz1;
  std::array<double, 5> cx2, cz2;
  Profile px, pz;
  std::vector<double> vv;  // dt^2 m^2 on the padded grid
  std::vector<double> w;   // 2 dt^2 m  (d vv / d m)
  std::vector<std::vector<Segment>> segments;  // per active row
  double src_area;         // 1 / (dx dz)
  double dt;
  int nt;

  simd::WaveRow row_args(int z) const {
    simd::WaveRow r;
    r.pitch = lay.pitch;
    r.cx1 = cx1.data();
    r.cz1 = cz1.data();
    r.cx2 = cx2.data();
    r.cz2 = cz2.data();
    r.ax = px.a.data();
    r.bx = px.b.data();
    r.az = pz.a[z];
    r.bz = pz.b[z];
    return r;
  }
  std::size_t padded_index(GridPoint p) const { return lay.at(p.z + width, p.x + width); }
};

Setup make_setup(const VelocityModel& model, const RickerWavelet& wavelet,
                 const SolverConfig& cfg) {
  const Grid2D& g = model.grid();
  const int W = cfg.pml_width;
  Layout lay;
  lay.nx = g.nx() + 2 * W;
  lay.nz = g.nz() + 2 * W;
  lay.pitch = lay.nx + 2 * kHalo;
  lay.total = static_cast<std::size_t>(lay.pitch) * (lay.nz + 2 * kHalo);

  const double v_pml = cfg.pml_velocity > 0.0 ? cfg.pml_velocity : max_value(model);
  const double f_pml = cfg.pml_frequency > 0.0 ? cfg.pml_frequency : wavelet.f0;

  Setup s{g,
          W,
          lay,
          {},
          {},
          {},
          {},
          pml_profile(lay.nx, W, g.dx(), cfg.dt, v_pml, cfg.pml_reflection, f_pml),
          pml_profile(lay.nz, W, g.dz(), cfg.dt, v_pml, cfg.pml_reflection, f_pml),
          std::vector<double>(lay.total, 0.0),
          std::vector<double>(lay.total, 0.0),
          {},
          1.0 / (g.dx() * g.dz()),
          cfg.dt,
          cfg.nt};
  for (int k = 0; k < 4; ++k) {
    s.cx1[k] = kFirst[k] / g.dx();
    s.cz1[k] = kFirst[k] / g.dz();
  }
  for (int k = 0; k < 5; ++k) {
    s.cx2[k] = kSecond[k] / (g.dx() * g.dx());
    s.cz2[k] = kSecond[k] / (g.dz() * g.dz());
  }

  const double dt2 = cfg.dt * cfg.dt;
  for (int z = 0; z < lay.nz; ++z) {
    const int mz = std::clamp(z - W, 0, g.nz() - 1);
    for (int x = 0; x < lay.nx; ++x) {
      const double m = model.at(mz, std::clamp(x - W, 0, g.nx() - 1));
      s.vv[lay.at(z, x)] = dt2 * m * m;
      s.w[lay.at(z, x)] = 2.0 * dt2 * m;
    }
  }

  // Cells within the layer plus one stencil radius need the full PML update;
  // the rest use the plain Laplacian.
  const int margin = W + kHalo;
  s.segments.resize(lay.nz);
  for (int z = 0; z < lay.nz; ++z) {
    auto& seg = s.segments[z];
    const bool pml_row = z < margin || z >= lay.nz - margin;
    if (pml_row || lay.nx <= 2 * margin) {
      seg.push_back({0, lay.nx, true});
    } else {
      seg.push_back({0, margin, true});
      seg.push_back({margin, lay.nx - margin, false});
      seg.push_back({lay.nx - margin, lay.nx, true});
    }
  }
  return s;
}

struct ForwardState {
  std::vector<double> prev, cur, psix, psiz, zetax, zetaz;

  explicit ForwardState(std::size_t n)
      : prev(n, 0.0), cur(n, 0.0), psix(n, 0.0), psiz(n, 0.0), zetax(n, 0.0), zetaz(n, 0.0) {}
};

// One leapfrog step n. lap_store (may be null) receives the Laplacian-like
// operator applied to u^n, compact [nz][nx]; scratch holds one row otherwise.
void forward_step(const Setup& s, ForwardState& st, int n, std::span<const double> wavelet,
                  std::size_t src, double src_scale, double* lap_store, double* scratch) {
  const auto& k = simd::kernels();
  const Layout& lay = s.lay;
  for (int z = 0; z < lay.nz; ++z) {
    const simd::WaveRow r = s.row_args(z);
    const std::size_t o = lay.row(z);
    for (const Segment& seg : s.segments[z])
      if (seg.pml) k.fwd_psi(r, st.cur.data() + o, st.psix.data() + o, st.psiz.data() + o, seg.x0,
                             seg.x1);
  }
  for (int z = 0; z < lay.nz; ++z) {
    const simd::WaveRow r = s.row_args(z);
    const std::size_t o = lay.row(z);
    double* lap = lap_store ? lap_store + static_cast<std::size_t>(z) * lay.nx : scratch;
    for (const Segment& seg : s.segments[z]) {
      if (seg.pml)
        k.fwd_pml(r, st.cur.data() + o, st.psix.data() + o, st.psiz.data() + o,
                  st.zetax.data() + o, st.zetaz.data() + o, s.vv.data() + o, st.prev.data() + o,
                  lap, seg.x0, seg.x1);
      else
        k.fwd_inner(r, st.cur.data() + o, s.vv.data() + o, st.prev.data() + o, lap, seg.x0,
                    seg.x1);
    }
  }
  st.prev[src] += src_scale * wavelet[n];
  std::swap(st.prev, st.cur);

  if ((n + 1) % kCheckEvery == 0 || n + 1 == s.nt) {
    for (double v : st.cur)
      if (!std::isfinite(v)) throw DivergenceError("non-finite wavefield", n);
  }
}

struct ShotResult {
  std::vector<double> traces;  // [receiver][time]
  double misfit = 0.0;
  std::vector<double> grad;    // padded layout, empty when not requested
};

class ShotRunner {
 public:
  ShotRunner(const Setup& s, const AcquisitionGeometry& geom, std::span<const double> wavelet,
             int shot, const SolverConfig& cfg)
      : s_(s), geom_(geom), wavelet_(wavelet), cfg_(cfg) {
    src_ = s.padded_index(geom.sources[shot]);
    src_scale_ = s.vv[src_] * s.src_area;
    for (const GridPoint& p : geom.receivers) rec_.push_back(s.padded_index(p));
  }

  ShotResult simulate() const {
    ShotResult out;
    out.traces.assign(rec_.size() * s_.nt, 0.0);
    ForwardState st(s_.lay.total);
    std::vector<double> scratch(s_.lay.nx);
    for (int n = 0; n < s_.nt; ++n) {
      forward_step(s_, st, n, wavelet_, src_, src_scale_, nullptr, scratch.data());
      record(st, n, out.traces);
    }
    return out;
  }

  ShotResult gradient(std::span<const double> observed) const {
    const int nt = s_.nt;
    const std::size_t cells = s_.lay.cells();
    const int interval = cfg_.checkpoint_interval > 0 ? cfg_.checkpoint_interval : nt;
    const bool checkpointing = cfg_.checkpoint_interval > 0 && cfg_.checkpoint_interval < nt;

    ShotResult out;
    out.traces.assign(rec_.size() * nt, 0.0);
    std::vector<double> lap(static_cast<std::size_t>(interval) * cells);
    std::vector<ForwardState> snapshots;
    std::vector<double> scratch(s_.lay.nx);

    // Forward sweep: either keep every step's operator output, or snapshot
    // the state at segment starts and recompute later.
    {
      ForwardState st(s_.lay.total);
      for (int n = 0; n < nt; ++n) {
        if (checkpointing && n % interval == 0) snapshots.push_back(st);
        double* store = checkpointing ? nullptr : lap.data() + static_cast<std::size_t>(n) * cells;
        forward_step(s_, st, n, wavelet_, src_, src_scale_, store, scratch.data());
        record(st, n, out.traces);
      }
    }

    std::vector<double> residual(out.traces.size());
    for (std::size_t i = 0; i < residual.size(); ++i) {
      residual[i] = out.traces[i] - observed[i];
      out.misfit += 0.5 * residual[i] * residual[i];
    }

    const std::size_t total = s_.lay.total;
    std::vector<double> abar(total, 0.0), gbar(total, 0.0), zbarx(total, 0.0),
        zbarz(total, 0.0), pbarx(total, 0.0), pbarz(total, 0.0), tx(total, 0.0), tz(total, 0.0),
        bpx(total, 0.0), bpz(total, 0.0);
    out.grad.assign(total, 0.0);
    const auto& k = simd::kernels();
    const Layout& lay = s_.lay;

    auto reverse_step = [&](int n, const double* lap_n) {
      for (std::size_t r = 0; r < rec_.size(); ++r)
        gbar[rec_[r]] += residual[r * nt + n];
      out.grad[src_] += s_.w[src_] * s_.src_area * wavelet_[n] * gbar[src_];
      for (int z = 0; z < lay.nz; ++z) {
        const simd::WaveRow r = s_.row_args(z);
        const std::size_t o = lay.row(z);
        const double* lz = lap_n + static_cast<std::size_t>(z) * lay.nx;
        for (const Segment& seg : s_.segments[z]) {
          if (seg.pml)
            k.adj_seed_pml(r, gbar.data() + o, s_.vv.data() + o, s_.w.data() + o, lz,
                           zbarx.data() + o, zbarz.data() + o, tx.data() + o, tz.data() + o,
                           out.grad.data() + o, seg.x0, seg.x1);
          else
            k.adj_seed_inner(r, gbar.data() + o, s_.vv.data() + o, s_.w.data() + o, lz,
                             tx.data() + o, tz.data() + o, out.grad.data() + o, seg.x0, seg.x1);
        }
      }
      for (int z = 0; z < lay.nz; ++z) {
        const simd::WaveRow r = s_.row_args(z);
        const std::size_t o = lay.row(z);
        for (const Segment& seg : s_.segments[z])
          if (seg.pml)
            k.adj_psi(r, tx.data() + o, tz.data() + o, pbarx.data() + o, pbarz.data() + o,
                      bpx.data() + o, bpz.data() + o, seg.x0, seg.x1);
      }
      for (int z = 0; z < lay.nz; ++z) {
        const simd::WaveRow r = s_.row_args(z);
        const std::size_t o = lay.row(z);
        for (const Segment& seg : s_.segments[z]) {
          if (seg.pml)
            k.adj_pml(r, gbar.data() + o, tx.data() + o, tz.data() + o, bpx.data() + o,
                      bpz.data() + o, abar.data() + o, seg.x0, seg.x1);
          else
            k.adj_inner(r, gbar.data() + o, tx.data() + o, tz.data() + o, abar.data() + o,
                        seg.x0, seg.x1);
        }
      }
      // abar now holds the adjoint of u^n, gbar the adjoint of u^{n-1}.
      std::swap(abar, gbar);
    };

    if (!checkpointing) {
      for (int n = nt - 1; n >= 0; --n)
        reverse_step(n, lap.data() + static_cast<std::size_t>(n) * cells);
    } else {
      for (int seg = static_cast<int>(snapshots.size()) - 1; seg >= 0; --seg) {
        const int n0 = seg * interval;
        const int n1 = std::min(nt, n0 + interval);
        ForwardState st = snapshots[seg];
        for (int n = n0; n < n1; ++n)
          forward_step(s_, st, n, wavelet_, src_, src_scale_,
                       lap.data() + static_cast<std::size_t>(n - n0) * cells, scratch.data());
        for (int n = n1 - 1; n >= n0; --n)
          reverse_step(n, lap.data() + static_cast<std::size_t>(n - n0) * cells);
      }
    }
    return out;
  }

 private:
  void record(const ForwardState& st, int n, std::vector<double>& traces) const {
    for (std::size_t r = 0; r < rec_.size(); ++r) traces[r * s_.nt + n] = st.cur[rec_[r]];
  }

  const Setup& s_;
  const AcquisitionGeometry& geom_;
  std::span<const double> wavelet_;
  const SolverConfig& cfg_;
  std::size_t src_ = 0;
  double src_scale_ = 0.0;
  std::vector<std::size_t> rec_;
};

// Runs fn(shot) for every shot on up to `threads` workers. Results are stored
// per shot, so any reduction done afterwards in shot order is deterministic.
template <class Fn>
void for_each_shot(int n_shots, int threads, Fn&& fn) {
  const int workers = std::clamp(threads, 1, n_shots);
  if (workers == 1) {
    for (int s = 0; s < n_shots; ++s) fn(s);
    return;
  }
  std::vector<std::exception_ptr> errors(n_shots);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int s = w; s < n_shots; s += workers) {
        try {
          fn(s);
        } catch (...) {
          errors[s] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void check_inputs(const VelocityModel& model, const AcquisitionGeometry& geom,
                  const RickerWavelet& wavelet, const SolverConfig& cfg) {
  cfg.validate();
  geom.validate(model.grid());
  if (!all_finite(model.values())) throw NumericError("velocity model contains non-finite values");
  if (min_value(model) <= 0.0) throw InvalidArgument("velocity model must be positive");
  if (std::abs(wavelet.dt - cfg.dt) > 1e-12 * cfg.dt)
    throw InvalidArgument("wavelet dt " + std::to_string(wavelet.dt) +
                          " differs from solver dt " + std::to_string(cfg.dt));
  if (wavelet.nt < cfg.nt) throw InvalidArgument("wavelet shorter than the simulation");
  check_cfl(model.grid(), max_value(model), cfg);
}

GradientField fold_padding(const Setup& s, const std::vector<double>& padded) {
  const Grid2D& g = s.grid;
  GradientField grad(g);
  for (int z = 0; z < s.lay.nz; ++z) {
    const int mz = std::clamp(z - s.width, 0, g.nz() - 1);
    for (int x = 0; x < s.lay.nx; ++x)
      grad.at(mz, std::clamp(x - s.width, 0, g.nx() - 1)) += padded[s.lay.at(z, x)];
  }
  return grad;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(dt > 0.0)) throw InvalidArgument("solver dt must be positive");
  if (nt < 1) throw InvalidArgument("solver nt must be positive");
  if (pml_width < 8) throw InvalidArgument("pml_width must be at least 8 cells");
  if (!(pml_reflection > 0.0 && pml_reflection < 1.0))
    throw InvalidArgument("pml_reflection must lie in (0, 1)");
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0))
    throw InvalidArgument("cfl_safety must lie in (0, 1]");
  if (!(rho0 > 0.0)) throw InvalidArgument("rho0 must be positive");
  if (checkpoint_interval < 0) throw InvalidArgument("checkpoint_interval must be >= 0");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
}

double stencil_stability_constant() {
  double sum = std::abs(kSecond[0]);
  for (int k = 1; k < 5; ++k) sum += 2.0 * std::abs(kSecond[k]);
  return std::sqrt(sum / 2.0);
}

double max_stable_dt(const Grid2D& grid, double v_max, double cfl_safety) {
  return cfl_safety * std::min(grid.dx(), grid.dz()) / (v_max * stencil_stability_constant());
}

void check_cfl(const Grid2D& grid, double v_max, const SolverConfig& cfg) {
  const double limit = max_stable_dt(grid, v_max, cfg.cfl_safety);
  if (cfg.dt > limit)
    throw StabilityError("dt = " + std::to_string(cfg.dt) + " s violates the CFL limit; need dt <= " +
                             std::to_string(limit) + " s for v_max = " + std::to_string(v_max) +
                             " m/s",
                         limit);
}

std::size_t wavefield_storage_bytes(const Grid2D& grid, const SolverConfig& cfg) {
  const std::size_t cells = static_cast<std::size_t>(grid.nx() + 2 * cfg.pml_width) *
                            (grid.nz() + 2 * cfg.pml_width);
  const std::size_t total = static_cast<std::size_t>(grid.nx() + 2 * cfg.pml_width + 2 * kHalo) *
                            (grid.nz() + 2 * cfg.pml_width + 2 * kHalo);
  if (cfg.checkpoint_interval <= 0 || cfg.checkpoint_interval >= cfg.nt)
    return static_cast<std::size_t>(cfg.nt) * cells * sizeof(double);
  const std::size_t n_snap = (cfg.nt + cfg.checkpoint_interval - 1) / cfg.checkpoint_interval;
  return (static_cast<std::size_t>(cfg.checkpoint_interval) * cells + n_snap * 6 * total) *
         sizeof(double);
}

ShotGather simulate_shots(const VelocityModel& model, const AcquisitionGeometry& geom,
                          const RickerWavelet& wavelet, const SolverConfig& cfg) {
  check_inputs(model, geom, wavelet, cfg);
  const Setup s = make_setup(model, wavelet, cfg);
  ShotGather out(geom.n_shots(), geom.n_receivers(), cfg.nt, cfg.dt);
  for_each_shot(geom.n_shots(), cfg.threads, [&](int shot) {
    ShotRunner runner(s, geom, wavelet.samples, shot, cfg);
    const ShotResult r = runner.simulate();
    std::copy(r.traces.begin(), r.traces.end(), out.shot(shot).begin());
  });
  return out;
}

double data_misfit(const ShotGather& d_syn, const ShotGather& d_obs) {
  if (!d_syn.same_shape(d_obs)) throw InvalidArgument("data_misfit: gather shapes differ");
  double acc = 0.0;
  const auto a = d_syn.values();
  const auto b = d_obs.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = a[i] - b[i];
    acc += r * r;
  }
  return 0.5 * acc;
}

MisfitGradient model_gradient(const VelocityModel& model, const AcquisitionGeometry& geom,
                              const RickerWavelet& wavelet, const ShotGather& d_obs,
                              const SolverConfig& cfg) {
  check_inputs(model, geom, wavelet, cfg);
  if (d_obs.n_shots() != geom.n_shots() || d_obs.n_receivers() != geom.n_receivers() ||
      d_obs.nt() != cfg.nt)
    throw InvalidArgument("observed gather shape does not match geometry/solver");

  const std::size_t per_shot = wavefield_storage_bytes(model.grid(), cfg);
  const std::size_t workers = std::clamp(cfg.threads, 1, geom.n_shots());
  if (per_shot * workers > cfg.max_storage_bytes) {
    const int suggestion = std::max(1, static_cast<int>(std::ceil(std::sqrt(cfg.nt))));
    throw ResourceError("wavefield storage of " + std::to_string(per_shot * workers) +
                            " bytes exceeds the limit of " +
                            std::to_string(cfg.max_storage_bytes) +
                            "; set checkpoint_interval (try " + std::to_string(suggestion) + ")",
                        suggestion);
  }

  const Setup s = make_setup(model, wavelet, cfg);
  std::vector<ShotResult> results(geom.n_shots());
  for_each_shot(geom.n_shots(), cfg.threads, [&](int shot) {
    ShotRunner runner(s, geom, wavelet.samples, shot, cfg);
    results[shot] = runner.gradient(d_obs.shot(shot));
  });

  double misfit = 0.0;
  std::vector<double> padded(s.lay.total, 0.0);
  for (const ShotResult& r : results) {
    misfit += r.misfit;
    for (std::size_t i = 0; i < padded.size(); ++i) padded[i] += r.grad[i];
  }
  return {misfit, fold_padding(s, padded)};
}

}  // namespace sfwi
