#include "paththerm/spacetime.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <string>

#include "paththerm/error.hpp"

namespace paththerm {

void UnitSystem::validate() const {
  require(hbar > 0.0 && std::isfinite(hbar), "hbar must be positive");
  require(mass > 0.0 && std::isfinite(mass), "mass must be positive");
  require(kB > 0.0 && std::isfinite(kB), "kB must be positive");
}

Lattice make_lattice(const UnitSystem& units, double dx) {
  units.validate();
  require(dx > 0.0 && std::isfinite(dx), "lattice spacing dx must be positive");
  return Lattice{dx, units.mass * dx * dx / units.hbar};
}

void Grid1D::validate() const {
  require(std::isfinite(x_min) && std::isfinite(x_max) && x_max > x_min,
          "grid requires x_max > x_min");
  require(n_cells >= 2, "grid requires at least 2 cells");
  require(h() > 0.0, "grid cell width must be positive");
}

std::vector<double> Grid1D::centers() const {
  std::vector<double> xs(n_cells);
  for (std::size_t i = 0; i < n_cells; ++i) xs[i] = x(i);
  return xs;
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void validate_potential(const Potential& u) {
  std::visit(overloaded{
                 [](const potential::Free&) {},
                 [](const potential::Constant& c) {
                   require(std::isfinite(c.c), "constant potential must be finite");
                 },
                 [](const potential::Harmonic& h) {
                   require(h.omega > 0.0 && std::isfinite(h.omega), "harmonic omega must be > 0");
                   require(h.mass > 0.0, "harmonic mass must be > 0");
                   require(std::isfinite(h.center), "harmonic center must be finite");
                 },
                 [](const potential::Tabulated& t) {
                   require(!t.x.empty() && t.x.size() == t.values.size(),
                           "tabulated potential needs matching, non-empty x and values");
                   for (std::size_t i = 0; i < t.x.size(); ++i) {
                     require(std::isfinite(t.x[i]) && std::isfinite(t.values[i]),
                             "tabulated potential values must be finite");
                     if (i > 0)
                       require(t.x[i] > t.x[i - 1], "tabulated abscissae must be increasing");
                   }
                 },
             },
             u);
}

double eval_potential(const Potential& u, double x) {
  return std::visit(
      overloaded{
          [](const potential::Free&) { return 0.0; },
          [](const potential::Constant& c) { return c.c; },
          [x](const potential::Harmonic& h) {
            const double d = x - h.center;
            return 0.5 * h.mass * h.omega * h.omega * d * d;
          },
          [x](const potential::Tabulated& t) {
            if (x <= t.x.front()) return t.values.front();
            if (x >= t.x.back()) return t.values.back();
            const auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
            const auto i = static_cast<std::size_t>(it - t.x.begin());
            const double w = (x - t.x[i - 1]) / (t.x[i] - t.x[i - 1]);
            return (1.0 - w) * t.values[i - 1] + w * t.values[i];
          },
      },
      u);
}

bool is_path_independent(const Potential& u) {
  return std::holds_alternative<potential::Free>(u) ||
         std::holds_alternative<potential::Constant>(u);
}

std::vector<double> sample_potential(const Potential& u, const Grid1D& grid) {
  std::vector<double> v(grid.n_cells);
  for (std::size_t i = 0; i < grid.n_cells; ++i) v[i] = eval_potential(u, grid.x(i));
  return v;
}

void Path::validate() const {
  require(times.size() == positions.size(), "path times and positions differ in length");
  require(!times.empty(), "path is empty");
  for (std::size_t i = 1; i < times.size(); ++i)
    require(times[i] > times[i - 1], "path times must be strictly increasing");
  if (closed) require(positions.front() == positions.back(), "closed path must return to start");
}

Path sample_lattice_walk(const Lattice& lattice, std::size_t n_steps, double x0, RngStream& rng) {
  require(lattice.dx > 0.0 && lattice.dt > 0.0, "lattice must have positive steps");
  Path p;
  p.times.resize(n_steps + 1);
  p.positions.resize(n_steps + 1);
  p.times[0] = 0.0;
  p.positions[0] = x0;
  long long site = 0;
  std::uint64_t bits = 0;
  int left = 0;
  for (std::size_t i = 1; i <= n_steps; ++i) {
    if (left == 0) {
      bits = rng();
      left = 64;
    }
    site += (bits & 1U) ? 1 : -1;
    bits >>= 1;
    --left;
    p.times[i] = static_cast<double>(i) * lattice.dt;
    p.positions[i] = x0 + static_cast<double>(site) * lattice.dx;
  }
  return p;
}

double sample_lattice_displacement(const Lattice& lattice, std::size_t n_steps, RngStream& rng) {
  long long up = 0;
  std::size_t remaining = n_steps;
  while (remaining >= 64) {
    up += std::popcount(rng());
    remaining -= 64;
  }
  if (remaining > 0) up += std::popcount(rng() & ((std::uint64_t{1} << remaining) - 1));
  const long long net = 2 * up - static_cast<long long>(n_steps);
  return static_cast<double>(net) * lattice.dx;
}

void bridge_from_normals(std::span<const double> normals, double x0, double x1, double tau,
                         double diffusion, std::span<double> x) {
  const std::size_t n = normals.size();
  require(n >= 1, "bridge needs at least one step");
  require(x.size() == n + 1, "bridge output must hold n_steps + 1 positions");
  require(tau > 0.0, "bridge duration must be positive");
  const double dt = tau / static_cast<double>(n);
  const double sd = std::sqrt(2.0 * diffusion * dt);
  double w = 0.0;
  x[0] = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    w += sd * normals[k];
    x[k + 1] = w;
  }
  const double wn = x[n];
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k <= n; ++k) {
    const double s = static_cast<double>(k) * inv_n;
    x[k] = x0 + s * (x1 - x0) + (x[k] - s * wn);
  }
  x[0] = x0;
  x[n] = x1;
}

std::vector<double> bridge_from_normals(std::span<const double> normals, double x0, double x1,
                                        double tau, double diffusion) {
  std::vector<double> x(normals.size() + 1);
  bridge_from_normals(normals, x0, x1, tau, diffusion, x);
  return x;
}

Path sample_pinned_bridge(const UnitSystem& units, double x0, double x1, double tau,
                          std::size_t n_steps, RngStream& rng) {
  units.validate();
  require(tau > 0.0, "bridge duration tau must be positive");
  require(n_steps >= 1, "bridge needs at least one step");
  StandardNormal normal;
  std::vector<double> z(n_steps);
  for (auto& v : z) v = normal(rng);
  Path p;
  p.positions = bridge_from_normals(z, x0, x1, tau, units.diffusion());
  p.times.resize(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k)
    p.times[k] = tau * static_cast<double>(k) / static_cast<double>(n_steps);
  p.closed = x0 == x1;
  return p;
}

Path sample_closed_bridge(const UnitSystem& units, double x0, double tau, std::size_t n_steps,
                          RngStream& rng) {
  require(tau > 0.0, "closed bridge duration tau must be positive");
  require(n_steps >= 2, "closed bridge needs at least 2 steps");
  return sample_pinned_bridge(units, x0, x0, tau, n_steps, rng);
}

}  // namespace paththerm
