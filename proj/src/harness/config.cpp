#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sfwi/harness/experiment.hpp"
#include "sfwi/wave/degrade.hpp"

namespace sfwi::harness {

namespace pt = boost::property_tree;

std::string scenario_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Clean: return "clean";
    case ScenarioKind::PoorInit: return "poor_init";
    case ScenarioKind::Noisy: return "noisy";
    case ScenarioKind::SparseShots: return "sparse_shots";
  }
  return "?";
}

ScenarioKind parse_scenario(const std::string& s) {
  for (auto k : {ScenarioKind::Clean, ScenarioKind::PoorInit, ScenarioKind::Noisy,
                 ScenarioKind::SparseShots})
    if (scenario_name(k) == s) return k;
  throw InvalidArgument("unknown scenario '" + s +
                        "' (expected clean, poor_init, noisy or sparse_shots)");
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

// Typed lookups that remember which keys were consumed and collect every
// problem instead of stopping at the first.
class Reader {
 public:
  explicit Reader(pt::ptree tree) : tree_(std::move(tree)) {}

  std::optional<std::string> raw(const std::string& sec, const std::string& key) {
    used_.insert(sec + "." + key);
    const auto s = tree_.get_child_optional(sec);
    if (!s) return std::nullopt;
    const auto v = s->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    std::string t = *v;
    t.erase(0, t.find_first_not_of(" \t"));
    t.erase(t.find_last_not_of(" \t") + 1);
    return t;
  }

  template <class T>
  std::optional<T> opt(const std::string& sec, const std::string& key) {
    const auto v = raw(sec, key);
    if (!v) return std::nullopt;
    T out{};
    if constexpr (std::is_same_v<T, bool>) {
      const std::string l = lower(*v);
      if (l == "true" || l == "yes" || l == "1" || l == "on") return true;
      if (l == "false" || l == "no" || l == "0" || l == "off") return false;
      fail(sec, key, "expected a boolean, got '" + *v + "'");
      return std::nullopt;
    } else if constexpr (std::is_same_v<T, std::string>) {
      return *v;
    } else {
      if (parse_number(*v, out)) return out;
      fail(sec, key, "expected a number, got '" + *v + "'");
      return std::nullopt;
    }
  }

  template <class T>
  void get(const std::string& sec, const std::string& key, T& target) {
    if (auto v = opt<T>(sec, key)) target = *v;
  }

  void fail(const std::string& sec, const std::string& key, const std::string& why) {
    errors_.push_back(sec + "." + key + ": " + why);
  }
  void fail(const std::string& why) { errors_.push_back(why); }

  void check_unknown() {
    static const std::set<std::string> sections{"grid", "acquisition", "solver",
                                                "method", "scenario", "output"};
    for (const auto& [sec, child] : tree_) {
      if (!sections.count(sec)) {
        errors_.push_back(sec + ": unknown section");
        continue;
      }
      for (const auto& [key, v] : child)
        if (!used_.count(sec + "." + key)) errors_.push_back(sec + "." + key + ": unknown key");
    }
  }

  const std::vector<std::string>& errors() const { return errors_; }

 private:
  pt::ptree tree_;
  std::set<std::string> used_;
  std::vector<std::string> errors_;
};

// Runs a validate() call and records its message under `where`.
template <class F>
void check(Reader& r, const std::string& where, F&& f) {
  try {
    f();
  } catch (const InvalidArgument& e) {
    r.fail(where + ": " + e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& ini_text) {
  pt::ptree tree;
  try {
    std::istringstream in(ini_text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({std::string("syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")"});
  }
  Reader r(std::move(tree));
  ExperimentConfig c;

  r.get("grid", "nx", c.nx);
  r.get("grid", "nz", c.nz);
  r.get("grid", "dx", c.dx);
  r.get("grid", "dz", c.dz);
  if (auto b = r.opt<std::string>("grid", "benchmark"))
    check(r, "grid.benchmark", [&] { c.benchmark = parse_benchmark(*b); });
  r.get("grid", "model_seed", c.model_seed);
  r.get("grid", "truth", c.truth_path);

  r.get("acquisition", "n_shots", c.n_shots);
  r.get("acquisition", "n_receivers", c.n_receivers);
  r.get("acquisition", "source_depth", c.source_depth);
  r.get("acquisition", "receiver_depth", c.receiver_depth);
  r.get("acquisition", "f0", c.f0);
  if (auto t = r.opt<double>("acquisition", "t0")) c.t0 = *t;

  SolverConfig& s = c.solver;
  s.nt = 500;
  r.get("solver", "dt", s.dt);
  r.get("solver", "nt", s.nt);
  r.get("solver", "pml_width", s.pml_width);
  r.get("solver", "pml_reflection", s.pml_reflection);
  r.get("solver", "pml_velocity", s.pml_velocity);
  r.get("solver", "pml_frequency", s.pml_frequency);
  r.get("solver", "cfl_safety", s.cfl_safety);
  r.get("solver", "checkpoint_interval", s.checkpoint_interval);
  if (auto mb = r.opt<double>("solver", "max_storage_mb"))
    s.max_storage_bytes = static_cast<std::size_t>(*mb * 1024.0 * 1024.0);
  r.get("solver", "threads", s.threads);

  // Scenario first: its preset supplies defaults for the method section.
  Scenario& sc = c.scenario;
  if (auto n = r.opt<std::string>("scenario", "name"))
    check(r, "scenario.name", [&] { sc.kind = parse_scenario(lower(*n)); });
  if (sc.kind == ScenarioKind::PoorInit) sc.init = InitKind::Linear;
  r.get("scenario", "snr_db", sc.snr_db);
  r.get("scenario", "n_keep_shots", sc.n_keep_shots);
  if (auto i = r.opt<std::string>("scenario", "init")) {
    const std::string l = lower(*i);
    if (l == "smoothed")
      sc.init = InitKind::Smoothed;
    else if (l == "linear")
      sc.init = InitKind::Linear;
    else
      r.fail("scenario", "init", "expected smoothed or linear, got '" + *i + "'");
  }
  r.get("scenario", "smooth_sigma", sc.smooth_sigma);
  if (auto v = r.opt<double>("scenario", "v_top")) sc.v_top = *v;
  if (auto v = r.opt<double>("scenario", "v_bottom")) sc.v_bottom = *v;
  if (auto v = r.opt<std::uint64_t>("scenario", "noise_seed")) sc.noise_seed = *v;

  InversionConfig& m = c.inversion;
  if (auto n = r.opt<std::string>("method", "name"))
    check(r, "method.name", [&] { m.method = parse_method(*n); });
  const bool noisy = sc.kind == ScenarioKind::Noisy;
  m.sfm.outer_steps = 30;
  m.sfm.inner_steps = noisy ? 50 : 100;
  r.get("method", "outer_steps", m.sfm.outer_steps);
  r.get("method", "inner_steps", m.sfm.inner_steps);
  if (auto t = r.opt<int>("method", "total_physics_steps"))
    m.total_physics_steps = *t;
  else if (m.method == Method::Sfm)
    m.total_physics_steps = m.sfm.outer_steps * m.sfm.inner_steps;
  else
    m.total_physics_steps = noisy ? 1500 : 300;
  m.warm_start_steps = m.method == Method::Dip ? 200 : 0;
  r.get("method", "warm_start_steps", m.warm_start_steps);
  r.get("method", "recompute_target", m.sfm.recompute_target);
  r.get("method", "lr_model", m.lr_model);
  r.get("method", "lr_net", m.lr_net);
  r.get("method", "weight_decay_net", m.weight_decay_net);
  r.get("method", "lambda_tv", m.lambda_tv);
  r.get("method", "auto_lambda", m.auto_lambda);
  r.get("method", "lambda_factor", m.lambda_factor);
  r.get("method", "tv_epsilon", m.tv_epsilon);
  r.get("method", "c_min", m.bounds.c_min);
  if (auto hi = r.opt<std::string>("method", "c_max")) {
    double v = 0.0;
    if (lower(*hi) == "none")
      m.bounds.c_max.reset();
    else if (parse_number(*hi, v))
      m.bounds.c_max = v;
    else
      r.fail("method", "c_max", "expected a number or none, got '" + *hi + "'");
  }
  r.get("method", "seed", m.seed);
  r.get("method", "record_every", m.record_every);
  r.get("method", "deterministic", m.deterministic);
  r.get("method", "base_channels", m.arch.base_channels);
  if (auto ms = r.opt<std::string>("method", "multipliers")) {
    std::vector<int> mult;
    std::stringstream ss(*ms);
    std::string tok;
    bool ok = true;
    while (std::getline(ss, tok, ',')) {
      int v = 0;
      tok.erase(0, tok.find_first_not_of(' '));
      tok.erase(tok.find_last_not_of(' ') + 1);
      ok = ok && parse_number(tok, v);
      mult.push_back(v);
    }
    if (ok && !mult.empty())
      m.arch.multipliers = mult;
    else
      r.fail("method", "multipliers", "expected a comma-separated list of integers, got '" + *ms + "'");
  }
  r.get("method", "res_blocks", m.arch.res_blocks);
  r.get("method", "groups", m.arch.groups);
  r.get("method", "time_multiplier", m.arch.time_multiplier);
  r.get("method", "net_velocity_scale", m.net_velocity_scale);

  r.get("output", "dir", c.out_dir);
  r.get("output", "snapshot_every", c.snapshot_every);
  r.get("output", "snapshots", c.snapshots);

  r.check_unknown();

  // Semantic checks, reported together with the parse problems.
  std::optional<Grid2D> grid;
  check(r, "grid", [&] { grid = c.grid(); });
  if (grid)
    check(r, "acquisition", [&] {
      const auto geom = surface_acquisition(*grid, c.n_shots, c.n_receivers, c.source_depth,
                                            c.receiver_depth);
      geom.validate(*grid);
      if (sc.kind == ScenarioKind::SparseShots) {
        try {
          subsample_shots(geom, sc.n_keep_shots);
        } catch (const InvalidArgument& e) {
          r.fail("scenario", "n_keep_shots", e.what());
        }
      }
    });
  if (!(c.f0 > 0.0)) r.fail("acquisition", "f0", "must be positive");
  if (c.t0 && !(*c.t0 >= 0.0)) r.fail("acquisition", "t0", "must be >= 0");
  check(r, "solver", [&] { s.validate(); });
  check(r, "method", [&] { m.validate(); });
  if (!(sc.snr_db > -100.0 && sc.snr_db < 300.0)) r.fail("scenario", "snr_db", "out of range");
  if (!(sc.smooth_sigma >= 0.0)) r.fail("scenario", "smooth_sigma", "must be >= 0");
  if (c.snapshot_every < 0) r.fail("output", "snapshot_every", "must be >= 0");
  if (c.out_dir.empty()) r.fail("output", "dir", "must not be empty");

  if (!r.errors().empty()) throw ConfigError(r.errors());
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string echo_config(const ExperimentConfig& c) {
  std::ostringstream o;
  const auto& s = c.solver;
  const auto& m = c.inversion;
  const auto& sc = c.scenario;
  auto b = [](bool v) { return v ? "true" : "false"; };
  o << "[grid]\n"
    << "nx = " << c.nx << "\nnz = " << c.nz << "\ndx = " << fmt(c.dx) << "\ndz = " << fmt(c.dz)
    << "\nbenchmark = " << benchmark_name(c.benchmark) << "\nmodel_seed = " << c.model_seed << '\n';
  if (!c.truth_path.empty()) o << "truth = " << c.truth_path << '\n';
  o << "\n[acquisition]\n"
    << "n_shots = " << c.n_shots << "\nn_receivers = " << c.n_receivers
    << "\nsource_depth = " << c.source_depth << "\nreceiver_depth = " << c.receiver_depth
    << "\nf0 = " << fmt(c.f0) << "\nt0 = " << fmt(c.source_delay()) << '\n';
  o << "\n[solver]\n"
    << "dt = " << fmt(s.dt) << "\nnt = " << s.nt << "\npml_width = " << s.pml_width
    << "\npml_reflection = " << fmt(s.pml_reflection) << "\npml_velocity = " << fmt(s.pml_velocity)
    << "\npml_frequency = " << fmt(s.pml_frequency) << "\ncfl_safety = " << fmt(s.cfl_safety)
    << "\ncheckpoint_interval = " << s.checkpoint_interval
    << "\nmax_storage_mb = " << fmt(static_cast<double>(s.max_storage_bytes) / (1024.0 * 1024.0))
    << "\nthreads = " << s.threads << '\n';
  o << "\n[method]\n"
    << "name = " << method_name(m.method) << "\ntotal_physics_steps = " << m.total_physics_steps
    << "\nlr_model = " << fmt(m.lr_model) << "\nlr_net = " << fmt(m.lr_net)
    << "\nweight_decay_net = " << fmt(m.weight_decay_net) << "\nlambda_tv = " << fmt(m.lambda_tv)
    << "\nauto_lambda = " << b(m.auto_lambda) << "\nlambda_factor = " << fmt(m.lambda_factor)
    << "\ntv_epsilon = " << fmt(m.tv_epsilon) << "\nc_min = " << fmt(m.bounds.c_min)
    << "\nc_max = " << (m.bounds.c_max ? fmt(*m.bounds.c_max) : std::string("none"))
    << "\nseed = " << m.seed << "\nrecord_every = " << m.record_every
    << "\nwarm_start_steps = " << m.warm_start_steps << "\ndeterministic = " << b(m.deterministic)
    << "\nouter_steps = " << m.sfm.outer_steps << "\ninner_steps = " << m.sfm.inner_steps
    << "\nrecompute_target = " << b(m.sfm.recompute_target)
    << "\nbase_channels = " << m.arch.base_channels << "\nmultipliers = ";
  for (std::size_t i = 0; i < m.arch.multipliers.size(); ++i)
    o << (i ? "," : "") << m.arch.multipliers[i];
  o << "\nres_blocks = " << m.arch.res_blocks << "\ngroups = " << m.arch.groups
    << "\ntime_multiplier = " << fmt(m.arch.time_multiplier)
    << "\nnet_velocity_scale = " << fmt(m.net_velocity_scale) << '\n';
  o << "\n[scenario]\n"
    << "name = " << scenario_name(sc.kind) << "\nsnr_db = " << fmt(sc.snr_db)
    << "\nn_keep_shots = " << sc.n_keep_shots
    << "\ninit = " << (sc.init == InitKind::Linear ? "linear" : "smoothed")
    << "\nsmooth_sigma = " << fmt(sc.smooth_sigma) << '\n';
  if (sc.v_top) o << "v_top = " << fmt(*sc.v_top) << '\n';
  if (sc.v_bottom) o << "v_bottom = " << fmt(*sc.v_bottom) << '\n';
  if (sc.noise_seed) o << "noise_seed = " << *sc.noise_seed << '\n';
  o << "\n[output]\n"
    << "dir = " << c.out_dir << "\nsnapshot_every = " << c.snapshot_every
    << "\nsnapshots = " << b(c.snapshots) << '\n';
  return o.str();
}

std::vector<std::pair<int, int>> parse_pairs(const std::string& s) {
  std::vector<std::pair<int, int>> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto x = tok.find_first_of("xX");
    int t = 0, k = 0;
    if (x == std::string::npos || !parse_number(tok.substr(0, x), t) ||
        !parse_number(tok.substr(x + 1), k))
      throw InvalidArgument("bad (T,K) pair '" + tok + "', expected TxK");
    out.emplace_back(t, k);
  }
  if (out.empty()) throw InvalidArgument("no (T,K) pairs given");
  return out;
}

}  // namespace sfwi::harness
