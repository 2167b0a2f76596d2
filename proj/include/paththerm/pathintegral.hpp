#pragma once

#include <cstddef>
#include <span>

#include "paththerm/spacetime.hpp"

namespace paththerm {

/// Discretised hamiltonian action, in units of energy x time.
struct ActionValue {
  double value = 0.0;
};

struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
};

/// Sum over steps of m dx^2 / (2 dt) + (u(x_i) + u(x_{i+1})) dt / 2.
ActionValue action(const Path& path, const Potential& u, const UnitSystem& units);

/// Trapezoid integral of u along equally spaced positions covering `duration`.
double potential_integral(std::span<const double> positions, double duration, const Potential& u);

/// Free-particle fundamental solution (4 pi D tau)^(-1/2) exp(-(x1-x0)^2 / 4 D tau).
double free_kernel(double x0, double x1, double tau, const UnitSystem& units);

/// Default path discretisation for a window tau.
std::size_t default_time_steps(double tau);

/// Feynman-Kac estimate of q(0, x0; tau, x1): pinned bridges drawn from the
/// free kernel, weighted by exp(-(1/hbar) integral of u). Path-independent
/// potentials are evaluated exactly with zero standard error.
MCEstimate estimate_q_mc(double x0, double x1, double tau, const Potential& u,
                         const UnitSystem& units, std::size_t n_paths, std::size_t n_steps,
                         RngStream& rng);

struct PartitionOptions {
  std::size_t n_paths = 100000;   ///< closed paths per quadrature node
  std::size_t n_steps = 0;        ///< 0 selects default_time_steps(tau)
  std::size_t n_quadrature = 64;  ///< midpoint nodes over the box
  double epsilon = 1e-3;          ///< relative half-width of the tau difference
  /// dlnz_dtau throws PrecisionFailure when std_error / |mean| exceeds this.
  /// 0 disables the check.
  double max_rel_std_error = 0.0;
  /// Whether each estimate consumes fresh randomness (split) or reuses the
  /// caller's stream key (common random numbers across calls).
  bool common_random_numbers = true;
};

/// Z_path = integral over the box of q(0, x0; tau, x0), midpoint rule over x0
/// with an equal number of closed bridges per node.
MCEstimate z_path(const Potential& u, const Grid1D& grid, double tau, const UnitSystem& units,
                  const PartitionOptions& opts, RngStream& rng);

/// d ln Z_path / d tau by a central difference over [tau(1-eps), tau(1+eps)]
/// that reuses the same bridge shapes on both sides.
MCEstimate dlnz_dtau(const Potential& u, const Grid1D& grid, double tau, const UnitSystem& units,
                     const PartitionOptions& opts, RngStream& rng);

}  // namespace paththerm
