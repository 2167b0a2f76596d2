#pragma once

#include <cstddef>
#include <vector>

#include "paththerm/diffusion.hpp"
#include "paththerm/spacetime.hpp"

namespace paththerm {

struct HSeries {
  std::vector<double> times;
  std::vector<double> H;
  std::vector<double> H_rate;
  std::vector<double> S_total;
  double S_final = 0.0;

  std::size_t size() const noexcept { return times.size(); }
};

struct VelocityCorrEstimate {
  double delta_t = 0.0;
  double value = 0.0;
  double std_error = 0.0;
  double beta = 0.0;
  std::size_t n_paths = 0;
};

/// -sum phi ln phi h - ln V with 0 ln 0 = 0. Throws InvalidArgument unless
/// phi is a density (integral 1 within 1e-6, no negative values beyond
/// rounding).
double h_functional(const Field& phi, double V);

/// (hbar/2m) sum (phi')^2 / phi h. Cells with phi below floor_rel * max(phi)
/// are skipped. phi' uses centred differences; at a reflecting wall the
/// missing neighbour is the mirror ghost cell (phi' = 0 on the wall).
double h_rate(const Field& phi, const UnitSystem& units, double floor_rel = 1e-12);

/// kB ln gamma(tau) with gamma = sqrt(m / (2 pi hbar tau)), the closed-path
/// count per point of a free particle.
double ln_path_count(double tau, const UnitSystem& units);

struct RelaxationOptions {
  SolverOptions solver{};
  /// Window used for gamma(tau) in S_total; the caller's beta hbar.
  double tau = 1.0;
  /// Relative monotonicity allowance, scaled by |H(0)|.
  double mono_rel = 1e-10;
};

/// Free relaxation (u = 0) from phi0 in a reflecting box, sampled at
/// n_snapshots equally spaced times from phi0.t to t_end. Throws
/// NumericalFailure if H decreases by more than mono_rel |H(0)| (plus a
/// rounding allowance) between snapshots.
HSeries relaxation_experiment(const Field& phi0, const UnitSystem& units, double t_end,
                              std::size_t n_snapshots, const RelaxationOptions& opts = {});

/// Mean of V+ V- over the interior triples of a path, with
/// V+ = (x[i+1] - x[i]) / dt and V- = (x[i] - x[i-1]) / dt.
double mean_velocity_product(const Path& path);

/// <V+ V-> over closed free bridges of duration tau = beta hbar with step
/// delta_t. tau / delta_t must be an integer >= 2. The standard error comes
/// from the spread of the per-path means.
VelocityCorrEstimate velocity_correlation(const UnitSystem& units, double beta, double delta_t,
                                          std::size_t n_paths, RngStream& rng);

}  // namespace paththerm
