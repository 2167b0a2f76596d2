#include "paththerm/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "paththerm/error.hpp"
#include "paththerm/parallel.hpp"

namespace paththerm {

namespace {

const potential::Harmonic& checked_oscillator(const potential::Harmonic& ho,
                                              const UnitSystem& units) {
  require(ho.mass == units.mass, "harmonic potential mass differs from the system mass");
  return ho;
}

template <class... F>
struct overloaded : F... {
  using F::operator()...;
};

}  // namespace

bool has_analytic_partition(const Potential& u) {
  return !std::holds_alternative<potential::Tabulated>(u);
}

double analytic_ln_z(const Potential& u, const Grid1D& grid, double tau, const UnitSystem& units) {
  require(tau > 0.0, "analytic_ln_z needs tau > 0");
  const double ln_free = std::log(grid.length()) +
                         0.5 * std::log(units.mass / (2.0 * std::numbers::pi * units.hbar * tau));
  return std::visit(
      overloaded{
          [&](const potential::Free&) { return ln_free; },
          [&](const potential::Constant& c) { return ln_free - c.c * tau / units.hbar; },
          [&](const potential::Harmonic& ho) {
            const double x = 0.5 * checked_oscillator(ho, units).omega * tau;
            // -ln(2 sinh x) = -x - log1p(-exp(-2x))
            return -x - std::log1p(-std::exp(-2.0 * x));
          },
          [&](const potential::Tabulated&) -> double {
            throw InvalidArgument("tabulated potentials have no closed-form partition function");
          }},
      u);
}

double analytic_internal_energy(const Potential& u, double tau, const UnitSystem& units) {
  require(tau > 0.0, "analytic_internal_energy needs tau > 0");
  const double kinetic = units.hbar / (2.0 * tau);
  return std::visit(
      overloaded{
          [&](const potential::Free&) { return kinetic; },
          [&](const potential::Constant& c) { return kinetic + c.c; },
          [&](const potential::Harmonic& ho) {
            const double w = checked_oscillator(ho, units).omega;
            return 0.5 * units.hbar * w / std::tanh(0.5 * w * tau);
          },
          [&](const potential::Tabulated&) -> double {
            throw InvalidArgument("tabulated potentials have no closed-form internal energy");
          }},
      u);
}

double analytic_beta(const Potential& u, double U, const UnitSystem& units) {
  const auto infeasible = [&](double floor) {
    if (!(U > floor)) {
      std::ostringstream os;
      os << "energy " << U << " is not above the floor " << floor << " of the potential";
      throw InfeasibleEnergy(os.str());
    }
  };
  return std::visit(
      overloaded{
          [&](const potential::Free&) {
            infeasible(0.0);
            return 1.0 / (2.0 * U);
          },
          [&](const potential::Constant& c) {
            infeasible(c.c);
            return 1.0 / (2.0 * (U - c.c));
          },
          [&](const potential::Harmonic& ho) {
            const double hw = units.hbar * checked_oscillator(ho, units).omega;
            infeasible(0.5 * hw);
            return 2.0 / hw * std::atanh(0.5 * hw / U);
          },
          [&](const potential::Tabulated&) -> double {
            throw InvalidArgument("tabulated potentials have no closed-form temperature");
          }},
      u);
}

double energy_floor(const Potential& u, const UnitSystem& units) {
  return std::visit(overloaded{[](const potential::Free&) { return 0.0; },
                               [](const potential::Constant& c) { return c.c; },
                               [&](const potential::Harmonic& ho) {
                                 return 0.5 * units.hbar * ho.omega;
                               },
                               [](const potential::Tabulated& t) {
                                 return *std::min_element(t.values.begin(), t.values.end());
                               }},
                    u);
}

double path_entropy(double U, double tau, double z_path, const UnitSystem& units) {
  require(z_path > 0.0 && std::isfinite(z_path), "path_entropy needs z_path > 0");
  require(tau > 0.0, "path_entropy needs tau > 0");
  return units.kB * tau * U / units.hbar + units.kB * std::log(z_path);
}

PartitionSource::PartitionSource(const SystemSpec& spec, const ThermoOptions& opts)
    : spec_(spec), opts_(opts) {
  spec_.units.validate();
  spec_.grid.validate();
  validate_potential(spec_.u);
  if (opts_.mode == PartitionMode::oracle)
    require(has_analytic_partition(spec_.u), "oracle mode needs a closed-form partition function");
}

MCEstimate PartitionSource::z(double tau) const {
  if (opts_.mode == PartitionMode::oracle)
    return MCEstimate{std::exp(analytic_ln_z(spec_.u, spec_.grid, tau, spec_.units)), 0.0, 0};
  RngStream rng(opts_.seed, Stage::partition);
  return z_path(spec_.u, spec_.grid, tau, spec_.units, opts_.mc, rng);
}

MCEstimate PartitionSource::internal_energy(double tau) const {
  if (opts_.mode == PartitionMode::oracle)
    return MCEstimate{analytic_internal_energy(spec_.u, tau, spec_.units), 0.0, 0};
  RngStream rng(opts_.seed, Stage::partition);
  MCEstimate d = dlnz_dtau(spec_.u, spec_.grid, tau, spec_.units, opts_.mc, rng);
  d.mean *= -spec_.units.hbar;
  d.std_error *= spec_.units.hbar;
  return d;
}

double path_temperature(const SystemSpec& spec, const std::function<double(double)>& tau_of_U,
                        double dU, const ThermoOptions& opts) {
  require(dU > 0.0 && std::isfinite(dU), "path_temperature needs dU > 0");
  const PartitionSource source(spec, opts);
  const auto entropy = [&](double U) {
    const double tau = tau_of_U(U);
    require(tau > 0.0 && std::isfinite(tau), "tau(U) must be positive");
    return path_entropy(U, tau, source.z(tau).mean, spec.units);
  };
  const double s_lo = entropy(spec.U - dU);
  const double s_mid = entropy(spec.U);
  const double s_hi = entropy(spec.U + dU);
  if (!(s_lo < s_mid && s_mid < s_hi)) {
    std::ostringstream os;
    os << "path entropy is not increasing across [" << spec.U - dU << ", " << spec.U + dU
       << "]: S = " << s_lo << ", " << s_mid << ", " << s_hi;
    throw AmbiguousTemperature(os.str());
  }
  return 2.0 * dU / (s_hi - s_lo);
}

ThermoReport solve_equilibrium_tau(const SystemSpec& spec, const ThermoOptions& opts) {
  require(std::isfinite(spec.U), "preparation energy must be finite");
  require(opts.tol > 0.0 && opts.tol < 1.0, "tolerance must be in (0, 1)");
  const PartitionSource source(spec, opts);
  const double hbar = spec.units.hbar;

  std::size_t evaluations = 0;
  const auto residual = [&](double tau) {
    ++evaluations;
    return source.internal_energy(tau).mean - spec.U;
  };
  const auto infeasible = [&](const std::string& why) {
    std::ostringstream os;
    os << "no equilibrium tau for U = " << spec.U << ": " << why;
    return InfeasibleEnergy(os.str());
  };

  // f is decreasing in tau: positive means tau is too short.
  const double tau0 = spec.U != 0.0 ? hbar / std::abs(spec.U) : hbar;
  double lo = tau0, hi = tau0, f_lo = 0.0, f_hi = 0.0;
  try {
    const double f0 = residual(tau0);
    if (f0 == 0.0) {
      lo = hi = tau0;
    } else if (f0 > 0.0) {
      f_lo = f0;
      std::size_t k = 0;
      for (hi = 2.0 * tau0; (f_hi = residual(hi)) > 0.0; hi *= 2.0) {
        lo = hi;
        f_lo = f_hi;
        if (++k == opts.max_expansions) throw infeasible("energy stays above U for all windows");
      }
    } else {
      f_hi = f0;
      std::size_t k = 0;
      for (lo = 0.5 * tau0; (f_lo = residual(lo)) < 0.0; lo *= 0.5) {
        hi = lo;
        f_hi = f_lo;
        if (++k == opts.max_expansions) throw infeasible("energy stays below U for all windows");
      }
    }
  } catch (const NumericalFailure& e) {
    throw infeasible(std::string("bracket expansion failed: ") + e.what());
  }
  const double slope = hi > lo ? (f_hi - f_lo) / (hi - lo) : 0.0;

  while (hi - lo > opts.tol * 0.5 * (hi + lo)) {
    const double mid = 0.5 * (lo + hi);
    const double f = residual(mid);
    if (f == 0.0) {
      lo = hi = mid;
      break;
    }
    if (f > 0.0) {
      lo = mid;
      f_lo = f;
    } else {
      hi = mid;
      f_hi = f;
    }
  }
  // Final linear interpolation inside the bracket keeps tau*(U) smooth in U.
  const double tau = hi > lo && f_lo != f_hi ? lo + f_lo * (hi - lo) / (f_lo - f_hi) : lo;

  ThermoReport r;
  r.U = spec.U;
  r.tau_star = tau;
  r.beta_star = tau / hbar;
  r.T_star = hbar / (spec.units.kB * tau);
  const MCEstimate z = source.z(tau);
  const MCEstimate e = source.internal_energy(tau);
  if (!(z.mean > 0.0)) throw NumericalFailure("partition function estimate is not positive");
  r.Z_path = z.mean;
  r.Z_std_error = z.std_error;
  r.S_path = path_entropy(spec.U, tau, z.mean, spec.units);
  r.F = spec.U - r.T_star * r.S_path;
  r.Lambda = hbar / std::sqrt(spec.units.mass * spec.units.kB * r.T_star);
  r.thermal_wavelength = std::sqrt(2.0 * std::numbers::pi * r.beta_star * hbar * hbar /
                                   spec.units.mass);
  r.U_check = e.mean;
  r.U_check_std_error = e.std_error;
  r.tau_std_error = slope != 0.0 ? e.std_error / std::abs(slope) : 0.0;
  r.iterations = evaluations;
  r.mode = opts.mode;
  r.seed = opts.seed;
  r.n_paths = opts.mc.n_paths;
  r.n_steps = opts.mc.n_steps ? opts.mc.n_steps : default_time_steps(tau);
  r.n_quadrature = opts.mc.n_quadrature;
  r.tol = opts.tol;

  if (r.tau_std_error > opts.tol * tau) {
    std::ostringstream os;
    os << "Monte Carlo uncertainty of tau* (" << r.tau_std_error << ") exceeds the tolerance "
       << opts.tol << " x " << tau << "; increase n_paths";
    throw PrecisionFailure(os.str());
  }

  if (has_analytic_partition(spec.u)) {
    const double oracle = hbar * analytic_beta(spec.u, spec.U, spec.units);
    r.oracle_tau_star = oracle;
    r.oracle_rel_error = std::abs(tau - oracle) / oracle;
    r.oracle_agrees = *r.oracle_rel_error <= std::max(opts.tol, 3.0 * r.tau_std_error / tau);
  }
  return r;
}

SplitMaximum maximize_split(const std::function<double(double)>& f, double lo, double hi,
                            std::size_t n_grid) {
  require(n_grid >= 3, "maximize_split needs at least 3 scan points");
  require(hi > lo, "maximize_split needs a non-empty interval");
  SplitMaximum out;
  out.scan_U_A.resize(n_grid);
  out.scan_value.resize(n_grid);
  const double step = (hi - lo) / static_cast<double>(n_grid + 1);
  for (std::size_t k = 0; k < n_grid; ++k) out.scan_U_A[k] = lo + double(k + 1) * step;
  parallel_for(n_grid, [&](std::size_t k) { out.scan_value[k] = f(out.scan_U_A[k]); });

  std::size_t best = 0;
  for (std::size_t k = 1; k < n_grid; ++k)
    if (out.scan_value[k] > out.scan_value[best]) best = k;
  out.grid_index = best;
  if (!std::isfinite(out.scan_value[best]))
    throw InfeasibleTotalEnergy("no feasible split on the scan");
  if (best == 0 || best + 1 == n_grid) {
    std::ostringstream os;
    os << "entropy maximum lies on the scan boundary at U_A = " << out.scan_U_A[best];
    throw InfeasibleTotalEnergy(os.str());
  }

  constexpr double g = 0.6180339887498949;
  double a = out.scan_U_A[best - 1], b = out.scan_U_A[best + 1];
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  const double stop = 1e-10 * (hi - lo);
  for (int it = 0; it < 200 && b - a > stop; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  out.U_A = fc >= fd ? c : d;
  out.value = std::max(fc, fd);
  if (out.scan_value[best] >= out.value) {
    out.U_A = out.scan_U_A[best];
    out.value = out.scan_value[best];
  }
  return out;
}

ZerothLawResult zeroth_law_experiment(const SystemSpec& spec_A, const SystemSpec& spec_B,
                                      double U_total, std::size_t n_grid,
                                      const ThermoOptions& opts) {
  require(std::isfinite(U_total), "total energy must be finite");
  const double lo = energy_floor(spec_A.u, spec_A.units);
  const double hi = U_total - energy_floor(spec_B.u, spec_B.units);
  if (!(hi > lo)) {
    std::ostringstream os;
    os << "total energy " << U_total << " does not exceed the sum of the floors";
    throw InfeasibleTotalEnergy(os.str());
  }

  ThermoOptions opts_A = opts;
  ThermoOptions opts_B = opts;
  std::uint64_t state = opts.seed;
  opts_A.seed = splitmix64(state);
  opts_B.seed = splitmix64(state);

  const auto solve = [](SystemSpec s, double U, const ThermoOptions& o) {
    s.U = U;
    return solve_equilibrium_tau(s, o);
  };
  const auto total = [&](double U_A) {
    try {
      return solve(spec_A, U_A, opts_A).S_path + solve(spec_B, U_total - U_A, opts_B).S_path;
    } catch (const InfeasibleEnergy&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  ZerothLawResult r;
  r.scan = maximize_split(total, lo, hi, n_grid);
  r.U_A = r.scan.U_A;
  r.U_B = U_total - r.U_A;
  r.report_A = solve(spec_A, r.U_A, opts_A);
  r.report_B = solve(spec_B, r.U_B, opts_B);
  r.T_A = r.report_A.T_star;
  r.T_B = r.report_B.T_star;
  r.S_total = r.report_A.S_path + r.report_B.S_path;
  return r;
}

std::string to_string(PartitionMode mode) {
  return mode == PartitionMode::oracle ? "oracle" : "monte_carlo";
}

}  // namespace paththerm
