#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "paththerm/spacetime.hpp"

namespace paththerm {

/// Snapshot phi(t, .) on a grid, one value per cell.
struct Field {
  Grid1D grid;
  double t = 0.0;
  std::vector<double> values;

  template <class F>
  static Field from_function(const Grid1D& grid, double t, F&& f) {
    Field out{grid, t, std::vector<double>(grid.n_cells)};
    for (std::size_t i = 0; i < grid.n_cells; ++i) out.values[i] = f(grid.x(i));
    return out;
  }

  /// Size matches the grid and every value is finite.
  void validate() const;

  /// sum(values) * h
  double integral() const;

  /// Non-negative with unit integral to `tol`.
  bool is_probability_density(double tol = 1e-9) const;

  /// Copy rescaled to unit integral. Throws when the integral is not positive.
  Field normalized() const;
};

/// Fundamental solution q(t0, y; t1, x) on a grid, stored row-major with the
/// source cell y as the row: entries[y * n + x]. Density convention: a field
/// evolves as phi1(x) = sum_y phi0(y) q(y, x) h.
struct Kernel {
  Grid1D grid;
  double t0 = 0.0;
  double t1 = 0.0;
  std::vector<double> entries;

  std::size_t n() const noexcept { return grid.n_cells; }
  double operator()(std::size_t y, std::size_t x) const noexcept { return entries[y * n() + x]; }
  double& operator()(std::size_t y, std::size_t x) noexcept { return entries[y * n() + x]; }
};

/// u(t, x) for solvers that accept a time-dependent potential.
using TimeDependentPotential = std::function<double(double t, double x)>;

struct SolverOptions {
  /// Requested step; the solver uses the largest step <= dt that divides the interval.
  double dt = 1e-3;
  /// The first step is replaced by this many implicit-Euler substeps
  /// (Rannacher start-up) to damp the stiff modes of rough data. 0 disables it.
  std::size_t startup_substeps = 4;
};

/// Solves -d(phi)/dt + D laplacian(phi) - u phi / hbar = 0 from phi0.t to t_end
/// with Crank-Nicolson in time and centred differences in space.
Field evolve_forward(const Field& phi0, const Potential& u, const UnitSystem& units, double t_end,
                     const SolverOptions& opts = {});
Field evolve_forward(const Field& phi0, const TimeDependentPotential& u, const UnitSystem& units,
                     double t_end, const SolverOptions& opts = {});

/// Solves d(phihat)/dt + D laplacian(phihat) - u phihat / hbar = 0 backwards
/// from phihat1.t down to t_start. This is forward evolution in the reversed
/// time coordinate, not the inverse of evolve_forward.
Field evolve_backward(const Field& phihat1, const Potential& u, const UnitSystem& units,
                      double t_start, const SolverOptions& opts = {});
Field evolve_backward(const Field& phihat1, const TimeDependentPotential& u,
                      const UnitSystem& units, double t_start, const SolverOptions& opts = {});

/// q(t0, .; t1, .) built by evolving a discrete delta (1/h in one cell) from
/// every source cell. All columns go through one batched solve. t1 == t0
/// yields the identity kernel.
Kernel kernel(const Grid1D& grid, const Potential& u, const UnitSystem& units, double t0,
              double t1, const SolverOptions& opts = {});

Kernel identity_kernel(const Grid1D& grid, double t);

/// Chapman-Kolmogorov: q_ac(y, x) = sum_b q_ab(y, b) q_bc(b, x) h.
Kernel compose_kernels(const Kernel& k_ab, const Kernel& k_bc);

/// phi(t1, x) = sum_y phi(t0, y) q(y, x) h
Field apply_kernel(const Kernel& k, const Field& phi);

double diffusion_time_tolerance(double t);

}  // namespace paththerm
