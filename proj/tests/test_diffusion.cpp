#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "paththerm/diffusion.hpp"
#include "paththerm/error.hpp"

using namespace paththerm;

namespace {

double gaussian(double x, double mean, double var) {
  return std::exp(-(x - mean) * (x - mean) / (2 * var)) / std::sqrt(2 * std::numbers::pi * var);
}

double heat_kernel(double x0, double x, double t, double D) {
  return std::exp(-(x - x0) * (x - x0) / (4 * D * t)) / std::sqrt(4 * std::numbers::pi * D * t);
}

double mehler(double x, double y, double tau, double m, double w, double hbar) {
  const double s = std::sinh(w * tau), c = std::cosh(w * tau);
  return std::sqrt(m * w / (2 * std::numbers::pi * hbar * s)) *
         std::exp(-m * w / (2 * hbar * s) * ((x * x + y * y) * c - 2 * x * y));
}

double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

double variance(const Field& f) {
  double m0 = 0, m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const double x = f.grid.x(i);
    m0 += f.values[i];
    m1 += f.values[i] * x;
    m2 += f.values[i] * x * x;
  }
  return m2 / m0 - (m1 / m0) * (m1 / m0);
}

double gaussian_spreading_error(double h) {
  const UnitSystem units{};
  const Grid1D g{-4, 4, std::size_t(std::llround(8 / h))};
  const Field phi0 = Field::from_function(g, 0.0, [](double x) { return gaussian(x, 0, 0.1); });
  const Field phi = evolve_forward(phi0, potential::Free{}, units, 0.5, {1e-3, 4});
  const Field exact = Field::from_function(
      g, 0.5, [&](double x) { return gaussian(x, 0, 0.1 + 2 * units.diffusion() * 0.5); });
  return rel_l2(phi.values, exact.values);
}

double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_SUITE("diffusion") {

TEST_CASE("Gaussian spreads with variance 2Dt") {
  CHECK(gaussian_spreading_error(1.0 / 512) < 1e-3);
}

TEST_CASE("second-order spatial convergence") {
  const double e1 = gaussian_spreading_error(1.0 / 16);
  const double e2 = gaussian_spreading_error(1.0 / 32);
  CHECK(e1 / e2 >= 3.5);
}

TEST_CASE("constant potential factorises") {
  const UnitSystem units{1.5, 0.8, 1};
  const Grid1D g{-3, 3, 120};
  const Field phi0 = Field::from_function(g, 0.2, [](double x) { return 1 + std::cos(x) * 0.5 + x * 0.1; });
  const double c = 0.9, dt = 0.5;
  const Field a = evolve_forward(phi0, potential::Constant{c}, units, 0.2 + dt);
  const Field b = evolve_forward(phi0, potential::Free{}, units, 0.2 + dt);
  const double f = std::exp(-c * dt / units.hbar);
  for (std::size_t i = 0; i < g.n_cells; ++i)
    CHECK(a.values[i] == doctest::Approx(b.values[i] * f).epsilon(1e-6));
}

TEST_CASE("time-dependent uniform potential integrates its time profile") {
  const UnitSystem units{};
  const Grid1D g{0, 1, 64};
  const Field phi0 = Field::from_function(g, 0.0, [](double x) { return 2 + std::cos(std::numbers::pi * x); });
  const auto u = [](double t, double) { return 0.7 * (1 + t); };
  const Field a = evolve_forward(phi0, TimeDependentPotential(u), units, 1.0, {1e-3, 4});
  const Field b = evolve_forward(phi0, potential::Free{}, units, 1.0, {1e-3, 4});
  const double f = std::exp(-0.7 * 1.5);
  for (std::size_t i = 0; i < g.n_cells; ++i)
    CHECK(a.values[i] == doctest::Approx(b.values[i] * f).epsilon(1e-5));

  const Field c = evolve_backward(a, TimeDependentPotential(u), units, 0.0);
  CHECK(c.t == 0.0);
}

TEST_CASE("zero-duration evolution is the identity") {
  const Grid1D g{0, 1, 16};
  const Field phi0 = Field::from_function(g, 0.3, [](double x) { return x * x; });
  CHECK(evolve_forward(phi0, potential::Harmonic{}, UnitSystem{}, 0.3).values == phi0.values);
  CHECK(evolve_backward(phi0, potential::Harmonic{}, UnitSystem{}, 0.3).values == phi0.values);
  CHECK_THROWS_AS(evolve_forward(phi0, potential::Free{}, UnitSystem{}, 0.2), InvalidArgument);
  CHECK_THROWS_AS(evolve_backward(phi0, potential::Free{}, UnitSystem{}, 0.4), InvalidArgument);
}

TEST_CASE("backward evolution spreads like forward evolution") {
  const UnitSystem units{1, 0.5, 1};
  const double D = units.diffusion();
  const Grid1D g{-6, 6, 1200};
  const Field phihat1 = Field::from_function(g, 1.0, [](double x) { return gaussian(x, 0.5, 0.1); });
  const Field back = evolve_backward(phihat1, potential::Free{}, units, 0.6);
  CHECK(back.t == doctest::Approx(0.6));
  const Field exact = Field::from_function(g, 0.6, [&](double x) { return gaussian(x, 0.5, 0.1 + 2 * D * 0.4); });
  CHECK(rel_l2(back.values, exact.values) < 1e-3);

  const Field again = evolve_forward(Field{g, 0.6, back.values}, potential::Free{}, units, 1.0);
  CHECK(variance(again) == doctest::Approx(0.1 + 4 * D * 0.4).epsilon(1e-3));
  CHECK(variance(again) > variance(phihat1) + 1.0 * D * 0.4);
}

TEST_CASE("free kernel matches the heat kernel") {
  const UnitSystem units{};
  const double tau = 0.05, D = units.diffusion();
  const Grid1D g{-1.5, 1.5, 768};
  const Kernel q = kernel(g, potential::Free{}, units, 0.0, tau, {tau / 128, 4});
  const double reach = 3 * std::sqrt(2 * D * tau);
  double err = 0;
  for (std::size_t y = 0; y < g.n_cells; y += 16) {
    for (std::size_t x = 0; x < g.n_cells; ++x) {
      if (std::abs(g.x(x) - g.x(y)) > reach || std::abs(g.x(y)) > 0.5) continue;
      const double ref = heat_kernel(g.x(y), g.x(x), tau, D);
      err = std::max(err, std::abs(q(y, x) - ref) / ref);
    }
  }
  CHECK(err < 1e-3);
}

TEST_CASE("harmonic kernel diagonal matches the Mehler kernel") {
  const UnitSystem units{1, 1, 1};
  const double tau = 0.5;
  const Grid1D g{-2.5, 2.5, 1280};
  const Kernel q = kernel(g, potential::Harmonic{1, 0, 1}, units, 0.0, tau, {tau / 64, 4});
  double err = 0;
  for (std::size_t i = 0; i < g.n_cells; i += 8) {
    if (std::abs(g.x(i)) > 0.75) continue;
    const double ref = mehler(g.x(i), g.x(i), tau, 1, 1, 1);
    err = std::max(err, std::abs(q(i, i) - ref) / ref);
  }
  CHECK(err < 1e-3);
}

TEST_CASE("kernel columns conserve mass and stay non-negative") {
  const UnitSystem units{0.8, 1.2, 1};
  const Grid1D g{0, 2, 100};
  const Kernel q = kernel(g, potential::Free{}, units, 0.0, 0.3);
  for (std::size_t y = 0; y < g.n_cells; ++y) {
    double s = 0;
    for (std::size_t x = 0; x < g.n_cells; ++x) {
      s += q(y, x) * g.h();
      CHECK(q(y, x) >= -1e-12);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("kernel is symmetric for static potentials") {
  const UnitSystem units{};
  const Grid1D g{-2, 2, 80};
  const potential::Tabulated u{{-2, 0, 2}, {1, -0.5, 2}};
  const Kernel q = kernel(g, u, units, 0.0, 0.4);
  double m = 0, asym = 0;
  for (std::size_t y = 0; y < g.n_cells; ++y)
    for (std::size_t x = 0; x < g.n_cells; ++x) {
      m = std::max(m, q(y, x));
      asym = std::max(asym, std::abs(q(y, x) - q(x, y)));
    }
  CHECK(asym / m < 1e-8);
}

TEST_CASE("field evolution equals the kernel integral") {
  const UnitSystem units{};
  const Grid1D g{-2, 2, 96};
  const potential::Harmonic u{1.5, 0.2, 1};
  const Field phi0 = Field::from_function(g, 0.0, [](double x) { return std::exp(-x * x) * (1 + 0.3 * x); });
  const SolverOptions opts{0.01, 4};
  const Field direct = evolve_forward(phi0, u, units, 0.5, opts);
  const Field via = apply_kernel(kernel(g, u, units, 0.0, 0.5, opts), phi0);
  CHECK(max_abs([&] {
          std::vector<double> d(g.n_cells);
          for (std::size_t i = 0; i < d.size(); ++i) d[i] = direct.values[i] - via.values[i];
          return d;
        }()) / max_abs(direct.values) < 1e-6);
}

TEST_CASE("short-time kernel tends to the discrete identity") {
  const Grid1D g{0, 1, 64};
  const Kernel zero = kernel(g, potential::Harmonic{}, UnitSystem{}, 0.5, 0.5);
  const Kernel id = identity_kernel(g, 0.5);
  CHECK(zero.entries == id.entries);
  const Kernel tiny = kernel(g, potential::Free{}, UnitSystem{}, 0.0, 1e-10);
  double err = 0;
  for (std::size_t i = 0; i < tiny.entries.size(); ++i)
    err = std::max(err, std::abs(tiny.entries[i] - id.entries[i]));
  CHECK(err * g.h() < 1e-6);
}

TEST_CASE("Chapman-Kolmogorov composition") {
  const UnitSystem units{};
  SUBCASE("free") {
    const Grid1D g{-1.5, 1.5, 384};
    const double tau = 0.05;
    const SolverOptions opts{tau / 128, 4};
    const Kernel full = kernel(g, potential::Free{}, units, 0, tau, opts);
    const Kernel a = kernel(g, potential::Free{}, units, 0, tau / 4, opts);
    const Kernel b = kernel(g, potential::Free{}, units, tau / 4, tau, opts);
    const Kernel c = compose_kernels(a, b);
    CHECK(c.t0 == 0.0);
    CHECK(c.t1 == tau);
    double err = 0;
    for (std::size_t i = 0; i < c.entries.size(); ++i)
      err = std::max(err, std::abs(c.entries[i] - full.entries[i]));
    CHECK(err / max_abs(full.entries) < 1e-5);

    const Kernel same = compose_kernels(identity_kernel(g, 0), full);
    double diff = 0;
    for (std::size_t i = 0; i < same.entries.size(); ++i)
      diff = std::max(diff, std::abs(same.entries[i] - full.entries[i]));
    CHECK(diff / max_abs(full.entries) < 1e-13);
  }
  SUBCASE("harmonic") {
    const Grid1D g{-2.5, 2.5, 320};
    const potential::Harmonic u{1, 0, 1};
    const SolverOptions opts{0.5 / 64, 4};
    const Kernel full = kernel(g, u, units, 0, 0.5, opts);
    const Kernel c = compose_kernels(kernel(g, u, units, 0, 0.125, opts), kernel(g, u, units, 0.125, 0.5, opts));
    double err = 0;
    for (std::size_t i = 0; i < c.entries.size(); ++i)
      err = std::max(err, std::abs(c.entries[i] - full.entries[i]));
    CHECK(err / max_abs(full.entries) < 1e-4);
  }
  SUBCASE("mismatches are rejected") {
    const Grid1D g{0, 1, 16}, h{0, 1, 32};
    const Kernel a = kernel(g, potential::Free{}, units, 0, 0.1);
    CHECK_THROWS_AS(compose_kernels(a, kernel(h, potential::Free{}, units, 0.1, 0.2)), InvalidArgument);
    CHECK_THROWS_AS(compose_kernels(a, kernel(g, potential::Free{}, units, 0.2, 0.3)), InvalidArgument);
  }
}

TEST_CASE("mass conservation and positivity under rough data") {
  const UnitSystem units{};
  const Grid1D g{0, 1, 256};
  const Field step = Field::from_function(g, 0, [](double x) { return x < 0.5 ? 2.0 : 0.0; });
  const Field out = evolve_forward(step, potential::Free{}, units, 1.0);
  CHECK(out.integral() == doctest::Approx(step.integral()).epsilon(1e-9));
  CHECK(*std::min_element(out.values.begin(), out.values.end()) >= -1e-12);
  const Field spike = Field::from_function(g, 0, [&](double x) { return std::abs(x - g.x(100)) < 1e-9 ? 1 / g.h() : 0.0; });
  const Field s = evolve_forward(spike, potential::Harmonic{3, 0.5, 1}, units, 0.05);
  CHECK(*std::min_element(s.values.begin(), s.values.end()) >= -1e-12);
}

TEST_CASE("periodic boundaries are translation invariant") {
  const UnitSystem units{};
  const Grid1D g{0, 1, 40, Boundary::periodic};
  const Kernel q = kernel(g, potential::Free{}, units, 0, 0.02);
  for (std::size_t y = 0; y < g.n_cells; ++y) {
    double s = 0;
    for (std::size_t x = 0; x < g.n_cells; ++x) {
      s += q(y, x) * g.h();
      CHECK(q(y, x) == doctest::Approx(q(0, (x + g.n_cells - y) % g.n_cells)).epsilon(1e-10).scale(1.0));
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
  const Grid1D two{0, 1, 2, Boundary::periodic};
  const Kernel k2 = kernel(two, potential::Free{}, units, 0, 0.1);
  CHECK((k2(0, 0) + k2(0, 1)) * two.h() == doctest::Approx(1.0));
}

TEST_CASE("fields") {
  const Grid1D g{0, 2, 4};
  const Field f{g, 0, {1, 1, 1, 1}};
  CHECK(f.integral() == 2.0);
  CHECK_FALSE(f.is_probability_density());
  CHECK(f.normalized().is_probability_density());
  CHECK_THROWS_AS((Field{g, 0, {0, 0, 0, 0}}.normalized()), InvalidArgument);
  CHECK_THROWS_AS((Field{g, 0, {1, 1, 1}}.validate()), InvalidArgument);
}

TEST_CASE("blow-up is reported as a numerical failure") {
  const Grid1D g{0, 1, 16};
  const Field f = Field::from_function(g, 0, [](double) { return 1.0; });
  // 1 + dt u / 2 hbar = 0 makes the implicit matrix singular.
  CHECK_THROWS_AS(evolve_forward(f, potential::Constant{-2000.0}, UnitSystem{}, 0.1, {1e-3, 0}),
                  NumericalFailure);
}

}  // TEST_SUITE
