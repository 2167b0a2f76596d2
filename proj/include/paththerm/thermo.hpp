#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "paththerm/pathintegral.hpp"
#include "paththerm/spacetime.hpp"

namespace paththerm {

/// One system preparation: constants, box, potential and energy U.
struct SystemSpec {
  UnitSystem units;
  Grid1D grid;
  Potential u;
  double U = 0.5;
};

enum class PartitionMode {
  monte_carlo,  ///< Z and -hbar dlnZ/dtau from closed-bridge ensembles
  oracle,       ///< closed forms, available for Free, Constant and Harmonic
};

struct ThermoOptions {
  PartitionMode mode = PartitionMode::monte_carlo;
  PartitionOptions mc;
  double tol = 1e-3;  ///< relative bracket width at which bisection stops
  std::uint64_t seed = 0;
  std::size_t max_expansions = 64;
};

struct ThermoReport {
  double U = 0.0;
  double tau_star = 0.0;
  double T_star = 0.0;
  double beta_star = 0.0;
  double Z_path = 0.0;
  double Z_std_error = 0.0;
  double S_path = 0.0;
  double F = 0.0;
  /// hbar / sqrt(m kB T), the closed-path extent at temperature T.
  double Lambda = 0.0;
  /// sqrt(2 pi beta hbar^2 / m), the length that normalises Z for a free box.
  double thermal_wavelength = 0.0;

  /// -hbar dlnZ/dtau at tau_star and its standard error.
  double U_check = 0.0;
  double U_check_std_error = 0.0;
  /// Propagated uncertainty of tau_star from the energy estimate.
  double tau_std_error = 0.0;
  std::size_t iterations = 0;

  std::optional<double> oracle_tau_star;
  std::optional<double> oracle_rel_error;
  bool oracle_agrees = true;

  PartitionMode mode = PartitionMode::monte_carlo;
  std::uint64_t seed = 0;
  std::size_t n_paths = 0;
  std::size_t n_steps = 0;
  std::size_t n_quadrature = 0;
  double tol = 0.0;
};

/// Free, Constant and Harmonic have closed-form partition functions.
bool has_analytic_partition(const Potential& u);

/// Closed-form ln Z_path(tau). Free and Constant use the box length; the
/// oscillator uses the full line, 1 / (2 sinh(omega tau / 2)).
double analytic_ln_z(const Potential& u, const Grid1D& grid, double tau, const UnitSystem& units);

/// Closed-form -hbar d ln Z_path / d tau.
double analytic_internal_energy(const Potential& u, double tau, const UnitSystem& units);

/// Inverse of the closed-form U(beta); throws InfeasibleEnergy below the
/// ground of the family (0, c, or hbar omega / 2).
double analytic_beta(const Potential& u, double U, const UnitSystem& units);

/// Lowest U for which an equilibrium tau can exist: 0 for Free, c for
/// Constant, hbar omega / 2 for Harmonic, the minimum sample for Tabulated.
double energy_floor(const Potential& u, const UnitSystem& units);

/// kB tau U / hbar + kB ln z.
double path_entropy(double U, double tau, double z_path, const UnitSystem& units);

/// Z_path and -hbar dlnZ/dtau for one system, in either mode. Monte Carlo
/// evaluations reuse one stream so repeated calls see the same bridges.
class PartitionSource {
 public:
  PartitionSource(const SystemSpec& spec, const ThermoOptions& opts);

  MCEstimate z(double tau) const;
  MCEstimate internal_energy(double tau) const;

 private:
  SystemSpec spec_;
  ThermoOptions opts_;
};

/// 1 / (dS_path / dU) by a central difference of width 2 dU along the
/// caller's tau(U). Throws AmbiguousTemperature unless S increases strictly
/// across the stencil.
double path_temperature(const SystemSpec& spec, const std::function<double(double)>& tau_of_U,
                        double dU, const ThermoOptions& opts = {});

/// Finds tau* with -hbar dlnZ/dtau(tau*) = U by bisection, starting from
/// hbar / U and expanding the bracket geometrically.
ThermoReport solve_equilibrium_tau(const SystemSpec& spec, const ThermoOptions& opts = {});

struct SplitMaximum {
  std::size_t grid_index = 0;  ///< argmax among the scan points
  double U_A = 0.0;            ///< refined maximiser
  double value = 0.0;
  std::vector<double> scan_U_A;
  std::vector<double> scan_value;
};

/// Maximises f over (lo, hi): scans lo + (k+1)(hi-lo)/(n_grid+1), then
/// golden-section search between the neighbours of the best point. Throws
/// InfeasibleTotalEnergy when the best scan point is the first or last.
SplitMaximum maximize_split(const std::function<double(double)>& f, double lo, double hi,
                            std::size_t n_grid);

struct ZerothLawResult {
  double U_A = 0.0;
  double U_B = 0.0;
  double T_A = 0.0;
  double T_B = 0.0;
  double S_total = 0.0;
  SplitMaximum scan;
  ThermoReport report_A;
  ThermoReport report_B;
};

/// Maximises S_A(U_A) + S_B(U_total - U_A) over feasible splits, each S at
/// its own equilibrium tau.
ZerothLawResult zeroth_law_experiment(const SystemSpec& spec_A, const SystemSpec& spec_B,
                                      double U_total, std::size_t n_grid = 41,
                                      const ThermoOptions& opts = {});

std::string to_string(PartitionMode mode);

}  // namespace paththerm
