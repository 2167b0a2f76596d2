#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "paththerm/bridge.hpp"
#include "paththerm/error.hpp"
#include "paththerm/io.hpp"
#include "paththerm/irreversibility.hpp"
#include "paththerm/pathintegral.hpp"
#include "paththerm/simd/kernels.hpp"
#include "paththerm/thermo.hpp"

#ifndef PATHTHERM_VERSION
#define PATHTHERM_VERSION "0.0.0"
#endif

namespace paththerm::cli {

using nlohmann::json;

Node::Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
  if (!j.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
}

bool Node::has(const std::string& key) const { return j_->contains(key); }

const json& Node::get(const std::string& key) {
  used_.insert(key);
  const auto it = j_->find(key);
  if (it == j_->end()) throw ConfigError(child(key), "missing required key '" + key + "'");
  return *it;
}

const json& Node::raw(const std::string& key) { return get(key); }

double Node::number(const std::string& key) {
  const json& v = get(key);
  if (!v.is_number()) throw ConfigError(child(key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(child(key), "expected a finite number");
  return d;
}

double Node::number(const std::string& key, double fallback) {
  used_.insert(key);
  return has(key) ? number(key) : fallback;
}

std::uint64_t Node::unsigned_integer(const std::string& key) {
  const json& v = get(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) throw ConfigError(child(key), "expected a non-negative integer");
  throw ConfigError(child(key), "expected an integer");
}

std::uint64_t Node::unsigned_integer(const std::string& key, std::uint64_t fallback) {
  used_.insert(key);
  return has(key) ? unsigned_integer(key) : fallback;
}

std::string Node::string(const std::string& key) {
  const json& v = get(key);
  if (!v.is_string()) throw ConfigError(child(key), "expected a string");
  return v.get<std::string>();
}

std::string Node::string(const std::string& key, const std::string& fallback) {
  used_.insert(key);
  return has(key) ? string(key) : fallback;
}

bool Node::boolean(const std::string& key, bool fallback) {
  used_.insert(key);
  if (!has(key)) return fallback;
  const json& v = get(key);
  if (!v.is_boolean()) throw ConfigError(child(key), "expected true or false");
  return v.get<bool>();
}

std::vector<double> Node::numbers(const std::string& key) {
  const json& v = get(key);
  if (!v.is_array()) throw ConfigError(child(key), "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(child(key) + "/" + std::to_string(i), "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

Node Node::object(const std::string& key) { return Node(get(key), child(key)); }

void Node::finish() const {
  for (const auto& [key, value] : j_->items())
    if (!used_.count(key)) throw ConfigError(child(key), "unknown key '" + key + "'");
}

UnitSystem parse_units(Node n) {
  UnitSystem u;
  u.hbar = n.number("hbar", u.hbar);
  u.mass = n.number("mass", u.mass);
  u.kB = n.number("kB", u.kB);
  n.finish();
  if (!(u.hbar > 0 && u.mass > 0 && u.kB > 0)) throw ConfigError(n.path(), "constants must be positive");
  return u;
}

Grid1D parse_grid(Node n) {
  Grid1D g;
  g.x_min = n.number("x_min");
  g.x_max = n.number("x_max");
  g.n_cells = n.unsigned_integer("n_cells");
  const std::string b = n.string("boundary", "reflecting");
  if (b == "reflecting")
    g.boundary = Boundary::reflecting;
  else if (b == "periodic")
    g.boundary = Boundary::periodic;
  else
    throw ConfigError(n.path() + "/boundary", "expected 'reflecting' or 'periodic'");
  n.finish();
  try {
    g.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(n.path(), e.what());
  }
  return g;
}

Potential parse_potential(Node n) {
  const std::string type = n.string("type");
  Potential u;
  if (type == "free") {
    u = potential::Free{};
  } else if (type == "constant") {
    u = potential::Constant{n.number("c")};
  } else if (type == "harmonic") {
    potential::Harmonic h;
    h.omega = n.number("omega", h.omega);
    h.center = n.number("center", h.center);
    h.mass = n.number("mass", h.mass);
    u = h;
  } else if (type == "tabulated") {
    u = potential::Tabulated{n.numbers("x"), n.numbers("values")};
  } else {
    throw ConfigError(n.path() + "/type", "unknown potential type '" + type + "'");
  }
  n.finish();
  try {
    validate_potential(u);
  } catch (const InvalidArgument& e) {
    throw ConfigError(n.path(), e.what());
  }
  return u;
}

Field parse_field(Node n, const Grid1D& grid, double t) {
  const std::string type = n.string("type");
  const double L = grid.length(), x0 = grid.x_min;
  Field f;
  if (type == "uniform") {
    f = Field::from_function(grid, t, [L](double) { return 1.0 / L; });
  } else if (type == "constant") {
    const double v = n.number("value");
    f = Field::from_function(grid, t, [v](double) { return v; });
  } else if (type == "gaussian") {
    const double c = n.number("center"), var = n.number("variance");
    if (!(var > 0)) throw ConfigError(n.path() + "/variance", "must be positive");
    f = Field::from_function(grid, t, [c, var](double x) {
      return std::exp(-(x - c) * (x - c) / (2 * var)) / std::sqrt(2 * std::numbers::pi * var);
    });
  } else if (type == "cosine") {
    f = Field::from_function(grid, t, [L, x0](double x) { return (1 + std::cos(std::numbers::pi * (x - x0) / L)) / L; });
  } else if (type == "half_box") {
    const std::string side = n.string("side", "left");
    if (side != "left" && side != "right") throw ConfigError(n.path() + "/side", "expected 'left' or 'right'");
    const double mid = x0 + 0.5 * L;
    const bool left = side == "left";
    f = Field::from_function(grid, t, [=](double x) { return (x < mid) == left ? 2.0 / L : 0.0; });
  } else if (type == "delta") {
    const double at = n.number("x");
    if (at < grid.x_min || at > grid.x_max) throw ConfigError(n.path() + "/x", "outside the grid");
    f = Field{grid, t, std::vector<double>(grid.n_cells, 0.0)};
    const auto i = std::min<std::size_t>(grid.n_cells - 1, static_cast<std::size_t>((at - x0) / grid.h()));
    f.values[i] = 1.0 / grid.h();
  } else if (type == "values") {
    f = Field{grid, t, n.numbers("values")};
    if (f.values.size() != grid.n_cells) throw ConfigError(n.path() + "/values", "length must equal grid n_cells");
  } else {
    throw ConfigError(n.path() + "/type", "unknown field type '" + type + "'");
  }
  n.finish();
  return f;
}

const std::vector<std::string>& experiments() {
  static const std::vector<std::string> names{"thermo", "htheorem", "vcorr", "bridge", "kernel"};
  return names;
}

namespace {

struct Context {
  Node& root;
  const RunOptions& opts;
  std::uint64_t seed;
  RunResult& result;
  json tolerances = json::object();

  void csv(const io::Table& t, const std::string& name) {
    io::write_csv(t, opts.out / name);
    result.files.push_back(name);
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

void run_thermo(Context& c) {
  const UnitSystem units = c.root.has("units") ? parse_units(c.root.object("units")) : UnitSystem{};
  const Grid1D grid = parse_grid(c.root.object("grid"));
  const Potential u = parse_potential(c.root.object("potential"));
  Node t = c.root.object("thermo");
  SystemSpec spec{units, grid, u, t.number("U")};
  ThermoOptions o;
  const std::string mode = t.string("mode", "monte_carlo");
  if (mode == "monte_carlo")
    o.mode = PartitionMode::monte_carlo;
  else if (mode == "oracle")
    o.mode = PartitionMode::oracle;
  else
    throw ConfigError(t.path() + "/mode", "expected 'monte_carlo' or 'oracle'");
  o.mc.n_paths = t.unsigned_integer("n_paths", o.mc.n_paths);
  o.mc.n_steps = t.unsigned_integer("n_steps", o.mc.n_steps);
  o.mc.n_quadrature = t.unsigned_integer("n_quadrature", o.mc.n_quadrature);
  o.mc.epsilon = t.number("epsilon", o.mc.epsilon);
  o.mc.max_rel_std_error = t.number("max_rel_std_error", o.mc.max_rel_std_error);
  o.tol = t.number("tol", o.tol);
  o.max_expansions = t.unsigned_integer("max_expansions", o.max_expansions);
  o.seed = c.seed;
  t.finish();
  c.root.finish();

  const ThermoReport r = solve_equilibrium_tau(spec, o);
  c.tolerances = {{"tol", o.tol}, {"epsilon", o.mc.epsilon}, {"max_rel_std_error", o.mc.max_rel_std_error}};
  c.result.report = {{"experiment", "thermo"}, {"units", io::to_json(units)}, {"grid", io::to_json(grid)},
                     {"potential", io::to_json(u)}, {"thermo", io::to_json(r)}};
  c.result.summary = "thermo: U = " + fmt(r.U) + ", tau* = " + fmt(r.tau_star) + ", T* = " + fmt(r.T_star) +
                     ", S_path = " + fmt(r.S_path) + ", F = " + fmt(r.F);
}

void run_htheorem(Context& c) {
  const UnitSystem units = c.root.has("units") ? parse_units(c.root.object("units")) : UnitSystem{};
  const Grid1D grid = parse_grid(c.root.object("grid"));
  if (c.root.has("potential") && !std::holds_alternative<potential::Free>(parse_potential(c.root.object("potential"))))
    throw ConfigError("/potential", "the relaxation experiment runs with u = 0");
  if (grid.boundary != Boundary::reflecting) throw ConfigError("/grid/boundary", "htheorem needs a reflecting box");
  Node h = c.root.object("htheorem");
  const Field phi0 = parse_field(h.object("initial"), grid, 0.0);
  const double L = grid.length();
  const double t_end = h.number("t_end", 3 * L * L / units.diffusion());
  const std::size_t n_snap = h.unsigned_integer("n_snapshots", 201);
  RelaxationOptions o;
  o.solver.dt = h.number("dt", o.solver.dt);
  o.solver.startup_substeps = h.unsigned_integer("startup_substeps", o.solver.startup_substeps);
  o.tau = h.number("beta", 1.0) * units.hbar;
  o.mono_rel = h.number("mono_rel", o.mono_rel);
  h.finish();
  c.root.finish();

  const HSeries s = relaxation_experiment(phi0.normalized(), units, t_end, n_snap, o);
  double max_decrease = 0;
  for (std::size_t k = 1; k < s.size(); ++k) max_decrease = std::max(max_decrease, s.H[k - 1] - s.H[k]);
  c.csv(io::hseries_table(s), "hseries.csv");
  c.tolerances = {{"mono_rel", o.mono_rel}, {"dt", o.solver.dt}, {"startup_substeps", o.solver.startup_substeps}};
  c.result.report = {{"experiment", "htheorem"},
                     {"grid", io::to_json(grid)},
                     {"t_end", t_end},
                     {"n_snapshots", s.size()},
                     {"H_initial", io::number(s.H.front())},
                     {"H_final", io::number(s.H.back())},
                     {"S_final", io::number(s.S_final)},
                     {"max_decrease", io::number(max_decrease)}};
  c.result.summary = "htheorem: H(0) = " + fmt(s.H.front()) + ", H(t_end) = " + fmt(s.H.back()) +
                     ", S_final = " + fmt(s.S_final);
}

void run_vcorr(Context& c) {
  const UnitSystem units = c.root.has("units") ? parse_units(c.root.object("units")) : UnitSystem{};
  Node v = c.root.object("vcorr");
  const std::vector<double> betas = v.numbers("beta");
  const bool by_steps = v.has("steps_per_window");
  if (by_steps == v.has("delta_t"))
    throw ConfigError(v.path(), "give exactly one of 'steps_per_window' and 'delta_t'");
  const std::vector<double> steps = by_steps ? v.numbers("steps_per_window") : v.numbers("delta_t");
  const std::size_t n_paths = v.unsigned_integer("n_paths", 100000);
  v.finish();
  c.root.finish();
  if (betas.empty() || steps.empty()) throw ConfigError(v.path(), "beta and step lists must be non-empty");

  std::vector<VelocityCorrEstimate> rows;
  json out = json::array();
  std::uint64_t index = 0;
  for (double beta : betas) {
    for (double s : steps) {
      const double dt = by_steps ? beta * units.hbar / s : s;
      RngStream rng(c.seed, Stage::velocity_corr, index++);
      const VelocityCorrEstimate e = velocity_correlation(units, beta, dt, n_paths, rng);
      rows.push_back(e);
      json row = io::to_json(e);
      const double ref = -1.0 / (units.mass * beta);
      row["closed_form"] = ref;
      row["z_score"] = io::number(e.std_error > 0 ? (e.value - ref) / e.std_error : 0.0);
      out.push_back(row);
    }
  }
  c.csv(io::vcorr_table(rows), "vcorr.csv");
  c.result.report = {{"experiment", "vcorr"}, {"units", io::to_json(units)}, {"rows", out}};
  double worst = 0;
  for (const auto& r : out) worst = std::max(worst, std::abs(r["z_score"].get<double>()));
  c.result.summary = "vcorr: " + std::to_string(rows.size()) + " estimates, max |z| = " + fmt(worst);
}

void run_bridge(Context& c) {
  const UnitSystem units = c.root.has("units") ? parse_units(c.root.object("units")) : UnitSystem{};
  const Grid1D grid = parse_grid(c.root.object("grid"));
  const Potential u = c.root.has("potential") ? parse_potential(c.root.object("potential")) : Potential{};
  Node b = c.root.object("bridge");
  const double t0 = b.number("t0", 0.0), t1 = b.number("t1", 1.0);
  const Field entry = parse_field(b.object("entry"), grid, t0);
  const Field exit = parse_field(b.object("exit"), grid, t1);
  BridgeOptions o;
  o.n_snapshots = b.unsigned_integer("n_snapshots", o.n_snapshots);
  o.steps_per_snapshot = b.unsigned_integer("steps_per_snapshot", o.steps_per_snapshot);
  o.floor_rel = b.number("floor_rel", o.floor_rel);
  const std::size_t every = b.unsigned_integer("export_every", 16);
  const std::size_t n_paths = b.unsigned_integer("n_paths", 0);
  b.finish();
  c.root.finish();
  if (o.n_snapshots < 3) throw ConfigError(b.path() + "/n_snapshots", "residuals need at least 3 snapshots");
  if (every == 0) throw ConfigError(b.path() + "/export_every", "must be positive");

  const EntryExit ee = normalize_entry_exit(entry, exit, u, units, o);
  const BridgeSystem bs = build_bridge(ee, units, o);
  const ResidualSeries cont = continuity_residual(bs);
  const SchrodingerResult sr = schrodinger_residual(bs);

  json snapshots = json::array();
  double mass_err = 0, psi_err = 0;
  for (std::size_t k = 0; k < bs.size(); ++k) {
    const double mass = bs.mu[k].integral();
    mass_err = std::max(mass_err, std::abs(mass - 1));
    for (std::size_t i = 0; i < grid.n_cells; ++i)
      if (bs.support[k][i])
        psi_err = std::max(psi_err, std::abs(std::norm(bs.psi[k][i]) - bs.mu[k].values[i]) / bs.mu[k].values[i]);
    if (k % every == 0 || k + 1 == bs.size()) {
      std::ostringstream name;
      name << "bridge_snapshot_" << std::setw(4) << std::setfill('0') << k << ".csv";
      c.csv(io::bridge_snapshot_table(bs, k, &sr.V[k]), name.str());
      snapshots.push_back({{"index", k}, {"t", bs.times[k]}, {"file", name.str()}});
    }
  }
  c.csv(io::Table{{"t", "continuity", "schrodinger"}, {cont.times, cont.norms, sr.residual.norms}},
        "bridge_residuals.csv");

  json report = {{"experiment", "bridge"},
                 {"grid", io::to_json(grid)},
                 {"potential", io::to_json(u)},
                 {"times", bs.times},
                 {"pairing", ee.pairing},
                 {"steps_per_snapshot", bridge_steps_per_snapshot(grid, units, t1 - t0, o)},
                 {"max_mass_error", io::number(mass_err)},
                 {"max_psi_identity_error", io::number(psi_err)},
                 {"continuity_residual_max", io::number(cont.max())},
                 {"schrodinger_residual_max", io::number(sr.residual.max())},
                 {"snapshots", snapshots}};

  if (n_paths > 0) {
    RngStream rng(c.seed, Stage::bridge_paths);
    const BridgeEnsemble e = sample_bridge_paths(bs, n_paths, rng);
    io::Table t{{"t", "sample_mean", "sample_var", "mu_mean", "mu_var"}, std::vector<std::vector<double>>(5)};
    const auto xs = grid.centers();
    for (std::size_t k = 0; k < bs.size(); ++k) {
      double m = 0, m2 = 0, w = 0, wm = 0, wm2 = 0;
      for (std::size_t p = 0; p < e.n_paths; ++p) {
        const double x = e.position(p, k);
        m += x;
        m2 += x * x;
      }
      for (std::size_t i = 0; i < xs.size(); ++i) {
        w += bs.mu[k].values[i];
        wm += bs.mu[k].values[i] * xs[i];
        wm2 += bs.mu[k].values[i] * xs[i] * xs[i];
      }
      const double n = static_cast<double>(e.n_paths);
      t.columns[0].push_back(bs.times[k]);
      t.columns[1].push_back(m / n);
      t.columns[2].push_back(m2 / n - (m / n) * (m / n));
      t.columns[3].push_back(wm / w);
      t.columns[4].push_back(wm2 / w - (wm / w) * (wm / w));
    }
    c.csv(t, "bridge_marginals.csv");
    report["n_paths"] = n_paths;
  }
  c.tolerances = {{"floor_rel", o.floor_rel}, {"n_snapshots", o.n_snapshots}};
  c.result.report = report;
  c.result.summary = "bridge: pairing = " + fmt(ee.pairing) + ", continuity residual = " + fmt(cont.max()) +
                     ", schrodinger residual = " + fmt(sr.residual.max());
}

void run_kernel(Context& c) {
  const UnitSystem units = c.root.has("units") ? parse_units(c.root.object("units")) : UnitSystem{};
  const Grid1D grid = parse_grid(c.root.object("grid"));
  const Potential u = parse_potential(c.root.object("potential"));
  Node k = c.root.object("kernel");
  const double t0 = k.number("t0", 0.0), t1 = k.number("t1", 1.0);
  SolverOptions so;
  so.dt = k.number("dt", so.dt);
  so.startup_substeps = k.unsigned_integer("startup_substeps", so.startup_substeps);
  std::vector<std::pair<double, double>> points;
  std::size_t mc_paths = 0, mc_steps = 0;
  if (k.has("mc")) {
    Node mc = k.object("mc");
    const json& pts = mc.raw("points");
    if (!pts.is_array()) throw ConfigError(mc.path() + "/points", "expected an array of [x0, x1] pairs");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const json& p = pts[i];
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        throw ConfigError(mc.path() + "/points/" + std::to_string(i), "expected [x0, x1]");
      points.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    mc_paths = mc.unsigned_integer("n_paths", 10000);
    mc_steps = mc.unsigned_integer("n_steps", 0);
    mc.finish();
  }
  k.finish();
  c.root.finish();
  if (!(t1 > t0)) throw ConfigError(k.path() + "/t1", "must exceed t0");

  const Kernel q = kernel(grid, u, units, t0, t1, so);
  c.csv(io::kernel_table(q), "kernel.csv");
  const std::size_t n = grid.n_cells;
  double mass_err = 0, asym = 0, peak = 0, min_entry = 0;
  for (double v : q.entries) peak = std::max(peak, std::abs(v));
  for (std::size_t y = 0; y < n; ++y) {
    double s = 0;
    for (std::size_t x = 0; x < n; ++x) {
      s += q(y, x) * grid.h();
      asym = std::max(asym, std::abs(q(y, x) - q(x, y)));
      min_entry = std::min(min_entry, q(y, x));
    }
    mass_err = std::max(mass_err, std::abs(s - 1));
  }
  // Row mass is conserved only without absorption.
  const bool conserves = std::holds_alternative<potential::Free>(u);
  json report = {{"experiment", "kernel"},
                 {"grid", io::to_json(grid)},
                 {"potential", io::to_json(u)},
                 {"t0", t0},
                 {"t1", t1},
                 {"max_row_mass_error", conserves ? io::number(mass_err) : json(nullptr)},
                 {"max_asymmetry", io::number(peak > 0 ? asym / peak : 0.0)},
                 {"min_entry", io::number(min_entry)}};

  if (!points.empty()) {
    json rows = json::array();
    io::Table t{{"x0", "x1", "pde", "mc", "std_error"}, std::vector<std::vector<double>>(5)};
    const double duration = t1 - t0;
    const std::size_t steps = mc_steps ? mc_steps : default_time_steps(duration);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto cell = [&](double x) {
        const double r = std::floor((x - grid.x_min) / grid.h());
        if (r < 0 || r >= double(n)) throw ConfigError("/kernel/mc/points/" + std::to_string(i), "point outside the grid");
        return static_cast<std::size_t>(r);
      };
      const std::size_t y = cell(points[i].first), x = cell(points[i].second);
      RngStream rng(c.seed, Stage::feynman_kac, i);
      const MCEstimate est = estimate_q_mc(grid.x(y), grid.x(x), duration, u, units, mc_paths, steps, rng);
      t.columns[0].push_back(grid.x(y));
      t.columns[1].push_back(grid.x(x));
      t.columns[2].push_back(q(y, x));
      t.columns[3].push_back(est.mean);
      t.columns[4].push_back(est.std_error);
      rows.push_back({{"x0", grid.x(y)},
                      {"x1", grid.x(x)},
                      {"pde", io::number(q(y, x))},
                      {"mc", io::number(est.mean)},
                      {"std_error", io::number(est.std_error)}});
    }
    c.csv(t, "kernel_mc.csv");
    report["mc"] = rows;
  }
  c.tolerances = {{"dt", so.dt}, {"startup_substeps", so.startup_substeps}};
  c.result.report = report;
  c.result.summary = "kernel: " + std::to_string(n) + "x" + std::to_string(n) + " on [" + fmt(t0) + ", " + fmt(t1) +
                     "], symmetry error = " + fmt(peak > 0 ? asym / peak : 0.0);
}

}  // namespace

RunResult run_experiment(const json& config, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  const auto& names = experiments();
  if (std::find(names.begin(), names.end(), opts.experiment) == names.end())
    throw ConfigError("/experiment", "unknown experiment '" + opts.experiment + "'");
  Node root(config, "");
  if (root.has("experiment") && root.string("experiment") != opts.experiment)
    throw ConfigError("/experiment", "config is for '" + config["experiment"].get<std::string>() +
                                         "', not '" + opts.experiment + "'");
  std::uint64_t seed = root.unsigned_integer("seed", 0);
  if (opts.seed) seed = *opts.seed;

  std::optional<simd::ScopedBackend> scalar;
  if (opts.deterministic) scalar.emplace(simd::Backend::scalar);

  std::error_code ec;
  std::filesystem::create_directories(opts.out, ec);
  if (ec) throw IoFailure("cannot create output directory " + opts.out.string() + ": " + ec.message());

  RunResult result;
  Context ctx{root, opts, seed, result};
  if (opts.experiment == "thermo")
    run_thermo(ctx);
  else if (opts.experiment == "htheorem")
    run_htheorem(ctx);
  else if (opts.experiment == "vcorr")
    run_vcorr(ctx);
  else if (opts.experiment == "bridge")
    run_bridge(ctx);
  else
    run_kernel(ctx);

  result.report["seed"] = seed;
  io::write_json(result.report, opts.out / "report.json");
  result.files.insert(result.files.begin(), "report.json");

  json echo = config;
  echo["seed"] = seed;
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.manifest = {{"experiment", opts.experiment},
                     {"seed", seed},
                     {"deterministic", opts.deterministic},
                     {"versions",
                      {{"paththerm", PATHTHERM_VERSION}, {"compiler", __VERSION__}, {"cplusplus", __cplusplus}}},
                     {"simd_backend", simd::active().name},
                     {"config", echo},
                     {"tolerances", ctx.tolerances},
                     {"outputs", result.files},
                     {"wall_time_s", wall}};
  if (config.contains("grid")) result.manifest["grid"] = config["grid"];
  io::write_json(result.manifest, opts.out / "manifest.json");
  return result;
}

namespace {

int code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument:
      return schema_error;
    case ErrorKind::numerical_failure:
    case ErrorKind::precision_failure:
    case ErrorKind::ambiguous_temperature:
      return numerical_error;
    case ErrorKind::infeasible_energy:
    case ErrorKind::infeasible_pair:
    case ErrorKind::infeasible_total_energy:
      return infeasible;
    case ErrorKind::io_failure:
      return io_error;
  }
  return internal_error;
}

json load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

int run_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Path-integral thermodynamics experiments"};
  app.name("paththerm");
  RunOptions opts;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  app.add_option("experiment", opts.experiment, "thermo, htheorem, vcorr, bridge or kernel")
      ->required()
      ->check(CLI::IsMember(experiments()));
  app.add_option("--config", config_path, "JSON experiment config")->required();
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--deterministic", opts.deterministic, "scalar kernels for bit-reproducible reports");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : schema_error;
  }
  if (*seed_opt) opts.seed = seed;
  opts.out = out_dir;

  try {
    const RunResult r = run_experiment(load_config(config_path), opts);
    out << r.summary << '\n';
    return ok;
  } catch (const ConfigError& e) {
    err << "config error at " << e.what() << '\n';
    return schema_error;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "io error: " << e.what() << '\n';
    return io_error;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return internal_error;
  }
}

}  // namespace paththerm::cli
