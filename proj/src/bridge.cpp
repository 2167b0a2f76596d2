#include "paththerm/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "paththerm/error.hpp"
#include "paththerm/parallel.hpp"

namespace paththerm {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t block_paths = 4096;

double max_value(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

void check_non_negative(const Field& f, const char* name) {
  f.validate();
  const double peak = max_value(f.values);
  for (double v : f.values)
    if (v < -1e-12 * std::max(peak, 0.0)) throw InvalidArgument(std::string(name) + " must be non-negative");
  if (!(peak > 0.0)) throw InvalidArgument(std::string(name) + " is identically zero");
}

// Neighbour indices with the solver's boundary closure: mirror ghost cells
// at reflecting walls, wrap-around on periodic grids.
std::size_t left_of(std::size_t i, std::size_t n, Boundary b) {
  return i > 0 ? i - 1 : (b == Boundary::periodic ? n - 1 : 0);
}
std::size_t right_of(std::size_t i, std::size_t n, Boundary b) {
  return i + 1 < n ? i + 1 : (b == Boundary::periodic ? 0 : n - 1);
}

std::vector<double> snapshot_times(double t0, double t1, std::size_t n) {
  std::vector<double> times(n);
  for (std::size_t k = 0; k < n; ++k)
    times[k] = k + 1 == n ? t1 : t0 + (t1 - t0) * static_cast<double>(k) / double(n - 1);
  return times;
}

SolverOptions sweep_solver(double span, std::size_t n_snapshots, std::size_t steps) {
  SolverOptions s;
  s.dt = span / double(n_snapshots - 1) / double(steps);
  s.startup_substeps = 0;
  return s;
}

std::vector<Field> forward_sweep(const Field& phi0, const Potential& u, const UnitSystem& units,
                                 const std::vector<double>& times, const SolverOptions& solver) {
  std::vector<Field> out;
  out.reserve(times.size());
  out.push_back(phi0);
  for (std::size_t k = 1; k < times.size(); ++k)
    out.push_back(evolve_forward(out.back(), u, units, times[k], solver));
  return out;
}

void check_pair(const Field& phi0, const Field& phihat1, const Potential& u, const UnitSystem& units,
                const BridgeOptions& opts) {
  units.validate();
  validate_potential(u);
  check_non_negative(phi0, "phi0");
  check_non_negative(phihat1, "phihat1");
  require(phi0.grid == phihat1.grid, "phi0 and phihat1 must share a grid");
  require(phihat1.t > phi0.t, "entry-exit pair needs t1 > t0");
  require(opts.n_snapshots >= 2, "bridge needs at least 2 snapshots");
  require(opts.floor_rel >= 0.0 && opts.floor_rel < 1.0, "bridge floor_rel must be in [0, 1)");
}

}  // namespace

std::size_t bridge_steps_per_snapshot(const Grid1D& grid, const UnitSystem& units, double span,
                                      const BridgeOptions& opts) {
  if (opts.steps_per_snapshot > 0) return opts.steps_per_snapshot;
  const double interval = span / double(opts.n_snapshots - 1);
  const double h = grid.h();
  const double dt_max = h * h / units.diffusion();
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(interval / dt_max * (1.0 - 1e-12))));
}

EntryExit normalize_entry_exit(const Field& phi0, const Field& phihat1, const Potential& u,
                               const UnitSystem& units, const BridgeOptions& opts) {
  check_pair(phi0, phihat1, u, units, opts);
  const double span = phihat1.t - phi0.t;
  const auto times = snapshot_times(phi0.t, phihat1.t, opts.n_snapshots);
  const SolverOptions solver =
      sweep_solver(span, opts.n_snapshots, bridge_steps_per_snapshot(phi0.grid, units, span, opts));
  Field phi = phi0;
  for (std::size_t k = 1; k < times.size(); ++k) phi = evolve_forward(phi, u, units, times[k], solver);

  double c = 0.0, mass = 0.0;
  for (std::size_t i = 0; i < phi.values.size(); ++i) {
    c += phi.values[i] * phihat1.values[i];
    mass += std::abs(phi.values[i]);
  }
  c *= phi0.grid.h();
  mass *= phi0.grid.h();
  // Below this the pairing is solver rounding in cells the diffusion never reached.
  const double zero = 1e-14 * mass * max_value(phihat1.values);
  if (!(c > zero) || !(c > 1e-300) || !std::isfinite(c)) {
    std::ostringstream os;
    os << "entry-exit pairing is zero (" << c << "): phihat1 lies outside the diffusion reach of phi0";
    throw InfeasiblePair(os.str());
  }
  EntryExit ee{phi0, phihat1, u, c};
  for (auto& v : ee.phihat1.values) v /= c;
  return ee;
}

SolverOptions BridgeSystem::solver() const {
  const double span = times.back() - times.front();
  return sweep_solver(span, times.size(), bridge_steps_per_snapshot(grid, units, span, opts));
}

BridgeSystem build_bridge(const EntryExit& ee, const UnitSystem& units, const BridgeOptions& opts) {
  check_pair(ee.phi0, ee.phihat1, ee.u, units, opts);
  BridgeSystem bs;
  bs.grid = ee.phi0.grid;
  bs.units = units;
  bs.u = ee.u;
  bs.opts = opts;
  bs.times = snapshot_times(ee.t0(), ee.t1(), opts.n_snapshots);
  const SolverOptions solver = bs.solver();
  const std::size_t n_snap = bs.times.size();

  // The two sweeps are independent.
  std::vector<Field> backward;
  parallel_for(2, [&](std::size_t task) {
    if (task == 0) {
      bs.phi = forward_sweep(ee.phi0, ee.u, units, bs.times, solver);
      return;
    }
    backward.resize(n_snap);
    backward[n_snap - 1] = ee.phihat1;
    for (std::size_t k = n_snap - 1; k-- > 0;)
      backward[k] = evolve_backward(backward[k + 1], ee.u, units, bs.times[k], solver);
  });
  bs.phihat = std::move(backward);

  const std::size_t n = bs.grid.n_cells;
  const double h = bs.grid.h();
  const double two_d = 2.0 * units.diffusion();  // hbar / m
  const Boundary b = bs.grid.boundary;
  bs.mu.resize(n_snap);
  bs.a.resize(n_snap);
  bs.ahat.resize(n_snap);
  bs.R.resize(n_snap);
  bs.S.resize(n_snap);
  bs.psi.resize(n_snap);
  bs.support.resize(n_snap);
  parallel_for(n_snap, [&](std::size_t k) {
    const auto& f = bs.phi[k].values;
    const auto& g = bs.phihat[k].values;
    const double t = bs.times[k];
    const double f_floor = opts.floor_rel * max_value(f);
    const double g_floor = opts.floor_rel * max_value(g);
    Field mu{bs.grid, t, std::vector<double>(n)};
    Field a{bs.grid, t, std::vector<double>(n, nan)}, ahat = a, R = a, S = a;
    std::vector<std::complex<double>> psi(n, {nan, nan});
    std::vector<std::uint8_t> on(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      mu.values[i] = std::max(f[i], 0.0) * std::max(g[i], 0.0);
      on[i] = f[i] > f_floor && g[i] > g_floor;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!on[i]) continue;
      const double lf = std::log(f[i]), lg = std::log(g[i]);
      R.values[i] = 0.5 * (lf + lg);
      S.values[i] = 0.5 * (lg - lf);
      psi[i] = std::exp(std::complex<double>(R.values[i], S.values[i]));
      const std::size_t l = left_of(i, n, b), r = right_of(i, n, b);
      if (f[l] > 0.0 && f[r] > 0.0)
        a.values[i] = two_d * (std::log(f[r]) - std::log(f[l])) / (2.0 * h);
      if (g[l] > 0.0 && g[r] > 0.0)
        ahat.values[i] = two_d * (std::log(g[r]) - std::log(g[l])) / (2.0 * h);
    }
    bs.mu[k] = std::move(mu);
    bs.a[k] = std::move(a);
    bs.ahat[k] = std::move(ahat);
    bs.R[k] = std::move(R);
    bs.S[k] = std::move(S);
    bs.psi[k] = std::move(psi);
    bs.support[k] = std::move(on);
  });
  return bs;
}

TransitionPair transition_densities(const BridgeSystem& bs, std::size_t i, std::size_t j) {
  require(i < j && j < bs.size(), "transition_densities needs snapshot indices i < j");
  const Kernel q = kernel(bs.grid, bs.u, bs.units, bs.times[i], bs.times[j], bs.solver());
  const std::size_t n = bs.grid.n_cells;
  const auto& fs = bs.phi[i].values;
  const auto& ft = bs.phi[j].values;
  const auto& gs = bs.phihat[i].values;
  const auto& gt = bs.phihat[j].values;
  const double ft_floor = bs.opts.floor_rel * max_value(ft);
  const double gs_floor = bs.opts.floor_rel * max_value(gs);
  TransitionPair out{q, q};
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double qyx = q(y, x);
      out.p(y, x) = ft[x] > ft_floor ? fs[y] * qyx / ft[x] : 0.0;
      out.phat(y, x) = gs[y] > gs_floor ? qyx * gt[x] / gs[y] : 0.0;
    }
  }
  return out;
}

double ResidualSeries::max() const {
  double m = 0.0;
  for (double v : norms) m = std::max(m, v);
  return m;
}

namespace {

// Cells whose 5-point neighbourhood is on support at snapshots k-1, k, k+1,
// excluding the two cells next to each wall.
std::vector<std::uint8_t> residual_mask(const BridgeSystem& bs, std::size_t k) {
  const std::size_t n = bs.grid.n_cells;
  std::vector<std::uint8_t> m(n, 0);
  if (n < 5) return m;
  for (std::size_t i = 2; i + 2 < n; ++i) {
    bool ok = true;
    for (std::size_t s = k - 1; s <= k + 1 && ok; ++s)
      for (std::size_t c = i - 2; c <= i + 2 && ok; ++c) ok = bs.support[s][c] != 0;
    m[i] = ok;
  }
  return m;
}

}  // namespace

ResidualSeries continuity_residual(const BridgeSystem& bs) {
  require(bs.size() >= 3, "continuity_residual needs at least 3 snapshots");
  const std::size_t n = bs.grid.n_cells;
  const double h = bs.grid.h(), dt = bs.snapshot_dt();
  ResidualSeries out;
  out.times.assign(bs.times.begin() + 1, bs.times.end() - 1);
  out.norms.resize(bs.size() - 2);
  parallel_for(bs.size() - 2, [&](std::size_t j) {
    const std::size_t k = j + 1;
    const auto mask = residual_mask(bs, k);
    const auto& mu = bs.mu[k].values;
    const auto flux = [&](std::size_t i) { return 0.5 * (bs.ahat[k].values[i] - bs.a[k].values[i]) * mu[i]; };
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask[i]) continue;
      const double r = (bs.mu[k + 1].values[i] - bs.mu[k - 1].values[i]) / (2.0 * dt) +
                       (flux(i + 1) - flux(i - 1)) / (2.0 * h);
      s += r * r;
    }
    out.norms[j] = std::sqrt(s * h);
  });
  return out;
}

SchrodingerResult schrodinger_residual(const BridgeSystem& bs) {
  require(bs.size() >= 3, "schrodinger_residual needs at least 3 snapshots");
  const std::size_t n = bs.grid.n_cells, n_snap = bs.size();
  const double h = bs.grid.h(), dt = bs.snapshot_dt();
  const double hbar = bs.units.hbar, D = bs.units.diffusion();
  const auto u = sample_potential(bs.u, bs.grid);
  const Boundary b = bs.grid.boundary;

  SchrodingerResult out;
  out.V.resize(n_snap);
  parallel_for(n_snap, [&](std::size_t k) {
    Field V{bs.grid, bs.times[k], std::vector<double>(n, nan)};
    const auto& S = bs.S;
    for (std::size_t i = 0; i < n; ++i) {
      double dS_dt;
      if (k == 0)
        dS_dt = (-3.0 * S[0].values[i] + 4.0 * S[1].values[i] - S[2].values[i]) / (2.0 * dt);
      else if (k + 1 == n_snap)
        dS_dt = (3.0 * S[k].values[i] - 4.0 * S[k - 1].values[i] + S[k - 2].values[i]) / (2.0 * dt);
      else
        dS_dt = (S[k + 1].values[i] - S[k - 1].values[i]) / (2.0 * dt);
      const double dS_dx = (S[k].values[right_of(i, n, b)] - S[k].values[left_of(i, n, b)]) / (2.0 * h);
      // NaN propagates from any off-support stencil point.
      V.values[i] = u[i] - 2.0 * hbar * (dS_dt + D * dS_dx * dS_dx);
    }
    out.V[k] = std::move(V);
  });

  out.residual.times.assign(bs.times.begin() + 1, bs.times.end() - 1);
  out.residual.norms.resize(n_snap - 2);
  const std::complex<double> i_hbar(0.0, hbar);
  parallel_for(n_snap - 2, [&](std::size_t j) {
    const std::size_t k = j + 1;
    const auto mask = residual_mask(bs, k);
    const auto& psi = bs.psi[k];
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask[i]) continue;
      const auto dpsi_dt = (bs.psi[k + 1][i] - bs.psi[k - 1][i]) / (2.0 * dt);
      const auto lap = (psi[i + 1] - 2.0 * psi[i] + psi[i - 1]) / (h * h);
      const auto r = i_hbar * dpsi_dt + hbar * D * lap - out.V[k].values[i] * psi[i];
      s += std::norm(r);
    }
    out.residual.norms[j] = std::sqrt(s * h);
  });
  return out;
}

Path BridgeEnsemble::path(std::size_t p) const {
  Path out{times, std::vector<double>(times.size()), false};
  for (std::size_t k = 0; k < times.size(); ++k) out.positions[k] = position(p, k);
  return out;
}

namespace {

std::uint32_t draw(const double* cdf, std::size_t n, RngStream& r) {
  const double total = cdf[n - 1];
  const double target = r.uniform() * total;
  const auto* it = std::upper_bound(cdf, cdf + n, target);
  return static_cast<std::uint32_t>(std::min<std::size_t>(it - cdf, n - 1));
}

}  // namespace

BridgeEnsemble sample_bridge_paths(const BridgeSystem& bs, std::size_t n_paths, RngStream& rng) {
  require(bs.size() >= 2, "sample_bridge_paths needs a built bridge");
  require(n_paths >= 1, "sample_bridge_paths needs n_paths >= 1");
  const std::size_t n = bs.grid.n_cells, n_snap = bs.size();
  BridgeEnsemble out{bs.grid, bs.times, n_paths, std::vector<std::uint32_t>(n_paths * n_snap)};
  const RngStream stream = rng.split();
  const std::size_t n_blocks = (n_paths + block_paths - 1) / block_paths;

  std::vector<double> cdf(n);
  {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) cdf[i] = c += bs.mu[0].values[i];
  }
  require(cdf.back() > 0.0, "bridge marginal at t0 is zero");
  parallel_for(n_blocks, [&](std::size_t blk) {
    RngStream r = stream.fork(blk).fork(0);
    for (std::size_t p = blk * block_paths; p < std::min(n_paths, (blk + 1) * block_paths); ++p)
      out.cells[p * n_snap] = draw(cdf.data(), n, r);
  });

  // Static potential and uniform spacing: one interval kernel serves every step.
  const Kernel q = kernel(bs.grid, bs.u, bs.units, bs.times[0], bs.times[1], bs.solver());
  std::vector<double> rows(n * n);
  for (std::size_t k = 0; k + 1 < n_snap; ++k) {
    const auto& g = bs.phihat[k + 1].values;
    parallel_for(n, [&](std::size_t y) {
      double c = 0.0;
      double* row = rows.data() + y * n;
      for (std::size_t x = 0; x < n; ++x) row[x] = c += std::max(q(y, x), 0.0) * std::max(g[x], 0.0);
    });
    parallel_for(n_blocks, [&](std::size_t blk) {
      RngStream r = stream.fork(blk).fork(k + 1);
      for (std::size_t p = blk * block_paths; p < std::min(n_paths, (blk + 1) * block_paths); ++p) {
        auto* c = out.cells.data() + p * n_snap;
        const double* row = rows.data() + std::size_t(c[k]) * n;
        c[k + 1] = row[n - 1] > 0.0 ? draw(row, n, r) : c[k];
      }
    });
  }
  return out;
}

}  // namespace paththerm
