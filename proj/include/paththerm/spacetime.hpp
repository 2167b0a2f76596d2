#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "paththerm/rng.hpp"

namespace paththerm {

/// Physical constants of a run. Defaults are natural units.
struct UnitSystem {
  double hbar = 1.0;
  double mass = 1.0;
  double kB = 1.0;

  /// Throws InvalidArgument unless every constant is strictly positive.
  void validate() const;

  /// Diffusion coefficient of the continuum limit, hbar / 2m.
  double diffusion() const noexcept { return hbar / (2.0 * mass); }
};

/// Discrete space-time whose step sizes obey dx^2 / dt = hbar / m.
struct Lattice {
  double dx = 0.0;
  double dt = 0.0;

  double momentum_quantum(double mass) const noexcept { return mass * dx / dt; }
  double energy_quantum(double mass) const noexcept { return 0.5 * mass * (dx / dt) * (dx / dt); }
};

Lattice make_lattice(const UnitSystem& units, double dx);

enum class Boundary { reflecting, periodic };

/// Uniform cell-centred grid on [x_min, x_max].
struct Grid1D {
  double x_min = 0.0;
  double x_max = 1.0;
  std::size_t n_cells = 2;
  Boundary boundary = Boundary::reflecting;

  void validate() const;
  double h() const noexcept { return (x_max - x_min) / static_cast<double>(n_cells); }
  double length() const noexcept { return x_max - x_min; }
  double x(std::size_t i) const noexcept { return x_min + (static_cast<double>(i) + 0.5) * h(); }
  std::vector<double> centers() const;

  friend bool operator==(const Grid1D&, const Grid1D&) = default;
};

namespace potential {

struct Free {};
struct Constant {
  double c = 0.0;
};
/// u(x) = m omega^2 (x - center)^2 / 2
struct Harmonic {
  double omega = 1.0;
  double center = 0.0;
  double mass = 1.0;
};
/// Piecewise-linear through (x[i], values[i]); clamped outside [x.front(), x.back()].
struct Tabulated {
  std::vector<double> x;
  std::vector<double> values;
};

}  // namespace potential

using Potential =
    std::variant<potential::Free, potential::Constant, potential::Harmonic, potential::Tabulated>;

/// Throws InvalidArgument for non-finite tables, non-increasing abscissae or omega <= 0.
void validate_potential(const Potential& u);

double eval_potential(const Potential& u, double x);

/// True when the path integral of u over any path of duration tau equals
/// u * tau (Free and Constant).
bool is_path_independent(const Potential& u);

/// Samples of u at the grid cell centres.
std::vector<double> sample_potential(const Potential& u, const Grid1D& grid);

/// Time-ordered positions. A closed path starts and ends at the same point.
struct Path {
  std::vector<double> times;
  std::vector<double> positions;
  bool closed = false;

  /// Strictly increasing times, equal lengths, and matching end points when closed.
  void validate() const;
  std::size_t size() const noexcept { return positions.size(); }
  double duration() const noexcept { return times.empty() ? 0.0 : times.back() - times.front(); }
};

/// Nearest-neighbour walk: every step moves +dx or -dx with probability 1/2.
Path sample_lattice_walk(const Lattice& lattice, std::size_t n_steps, double x0, RngStream& rng);

/// Net displacement of an n-step lattice walk without materialising the path.
double sample_lattice_displacement(const Lattice& lattice, std::size_t n_steps, RngStream& rng);

/// Maps n_steps standard normals onto a pinned Brownian bridge from (0, x0)
/// to (tau, x1) with variance rate 2D. The map is linear in `normals`, which
/// is what the analytic covariance checks rely on. Returns n_steps+1 positions.
std::vector<double> bridge_from_normals(std::span<const double> normals, double x0, double x1,
                                        double tau, double diffusion);

/// As above, writing into `out` (size normals.size() + 1).
void bridge_from_normals(std::span<const double> normals, double x0, double x1, double tau,
                         double diffusion, std::span<double> out);

/// Exact sampler of a pinned Brownian bridge with variance rate hbar/m.
Path sample_pinned_bridge(const UnitSystem& units, double x0, double x1, double tau,
                          std::size_t n_steps, RngStream& rng);

/// Closed bridge x(0) = x(tau) = x0.
Path sample_closed_bridge(const UnitSystem& units, double x0, double tau, std::size_t n_steps,
                          RngStream& rng);

}  // namespace paththerm
