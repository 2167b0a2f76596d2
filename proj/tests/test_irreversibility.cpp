#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "paththerm/error.hpp"
#include "paththerm/irreversibility.hpp"

using namespace paththerm;

namespace {

constexpr double pi = std::numbers::pi;

Field cosine_density(std::size_t n) {
  return Field::from_function(Grid1D{0, 1, n}, 0.0, [](double x) { return 1 + std::cos(pi * x); });
}

// Amplitude of the slowest Neumann mode cos(pi x / L).
double mode_amplitude(const Field& f) {
  double s = 0;
  const double L = f.grid.length();
  for (std::size_t i = 0; i < f.values.size(); ++i)
    s += f.values[i] * std::cos(pi * (f.grid.x(i) - f.grid.x_min) / L);
  return 2 * s * f.grid.h() / L;
}

}  // namespace

TEST_SUITE("irreversibility") {

TEST_CASE("H of uniform, half-box and cosine densities") {
  const Grid1D g{0, 2, 256};
  CHECK(std::abs(h_functional(Field::from_function(g, 0, [](double) { return 0.5; }), 2.0)) < 1e-14);
  const Field half = Field::from_function(g, 0, [](double x) { return x < 1 ? 1.0 : 0.0; });
  CHECK(h_functional(half, 2.0) == doctest::Approx(-std::log(2.0)).epsilon(1e-12));

  const double ref = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [](double x) {
        const double f = 1 + std::cos(pi * x);
        return f > 0 ? -f * std::log(f) : 0.0;
      },
      0.0, 1.0, 15, 1e-14);
  CHECK(h_functional(cosine_density(1024), 1.0) == doctest::Approx(ref).epsilon(1e-5));
  CHECK(ref < 0);
}

TEST_CASE("H rejects unnormalised or negative input") {
  const Grid1D g{0, 1, 64};
  CHECK_THROWS_AS(h_functional(Field::from_function(g, 0, [](double) { return 1.1; }), 1.0),
                  InvalidArgument);
  Field f = Field::from_function(g, 0, [](double) { return 1.0; });
  f.values[3] = -0.5;
  f.values[4] = 1.5;
  CHECK_THROWS_AS(h_functional(f, 1.0), InvalidArgument);
  CHECK_THROWS_AS(h_functional(Field::from_function(g, 0, [](double) { return 1.0; }), 0.0),
                  InvalidArgument);
}

TEST_CASE("H rate of uniform and Gaussian densities") {
  const UnitSystem units{};
  CHECK(h_rate(Field::from_function(Grid1D{0, 1, 64}, 0, [](double) { return 1.0; }), units) == 0.0);
  const Field gauss = Field::from_function(Grid1D{-12, 12, 4800}, 0, [](double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2 * pi);
  });
  CHECK(h_rate(gauss, units) == doctest::Approx(0.5).epsilon(1e-4));
  const UnitSystem heavy{1, 4, 1};
  CHECK(h_rate(gauss, heavy) == doctest::Approx(0.125).epsilon(1e-4));
}

TEST_CASE("uniform density is a fixed point") {
  const Field u = Field::from_function(Grid1D{0, 1, 128}, 0, [](double) { return 1.0; });
  const HSeries s = relaxation_experiment(u, UnitSystem{}, 1.0, 11);
  REQUIRE(s.size() == 11);
  for (std::size_t k = 0; k < s.size(); ++k) {
    CHECK(std::abs(s.H[k]) < 1e-13);
    CHECK(s.H_rate[k] < 1e-20);
  }
  CHECK(s.times.front() == 0.0);
  CHECK(s.times.back() == 1.0);
}

TEST_CASE("cosine relaxation follows the Neumann spectrum") {
  const UnitSystem units{};
  const double D = units.diffusion();
  const Field phi0 = cosine_density(256);
  RelaxationOptions o;
  o.solver.dt = 1e-3;
  const HSeries s = relaxation_experiment(phi0, units, 2.0, 201, o);
  REQUIRE(s.size() == 201);
  for (std::size_t k = 1; k < s.size(); ++k) {
    CHECK(s.H[k] >= s.H[k - 1]);
    CHECK(s.H[k] <= 0.0);
    CHECK(s.H_rate[k] >= 0.0);
  }

  // Envelope: -H ~ a^2 / 4 for small amplitude a, so it decays at 2 D pi^2.
  const std::size_t i = 150, j = 200;
  const double env_rate = std::log(s.H[i] / s.H[j]) / (s.times[j] - s.times[i]);
  CHECK(env_rate == doctest::Approx(2 * D * pi * pi).epsilon(1e-2));

  // Finite-difference H against the rate at the midpoint (endpoint average).
  for (std::size_t k = 10; k + 1 < s.size(); k += 10) {
    const double fd = (s.H[k + 1] - s.H[k]) / (s.times[k + 1] - s.times[k]);
    const double mid = 0.5 * (s.H_rate[k] + s.H_rate[k + 1]);
    CHECK(fd == doctest::Approx(mid).epsilon(1e-2));
  }

  const Field a = evolve_forward(phi0, potential::Free{}, units, 0.5, o.solver);
  const Field b = evolve_forward(phi0, potential::Free{}, units, 1.5, o.solver);
  const double mode_rate = std::log(mode_amplitude(a) / mode_amplitude(b)) / 1.0;
  CHECK(mode_rate == doctest::Approx(D * pi * pi).epsilon(1e-2));
}

TEST_CASE("half-box step relaxes to uniform") {
  const UnitSystem units{};
  const Field phi0 = Field::from_function(Grid1D{0, 1, 256}, 0, [](double x) { return x < 0.5 ? 2.0 : 0.0; });
  const HSeries s = relaxation_experiment(phi0, units, 6.0, 61);
  CHECK(s.H.front() == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
  for (std::size_t k = 1; k < s.size(); ++k) {
    // Strict growth until H reaches rounding level, then flat within it.
    if (s.H[k - 1] < -1e-12) CHECK(s.H[k] > s.H[k - 1]);
    CHECK(s.H[k] >= s.H[k - 1] - 1e-15);
  }
  CHECK(std::abs(s.H.back()) < 1e-4);
}

TEST_CASE("total entropy uses the closed-path count") {
  const UnitSystem units{1, 1, 2};
  const Field phi0 = Field::from_function(Grid1D{0, 3, 96}, 0, [](double) { return 1.0 / 3; });
  RelaxationOptions o;
  o.tau = 0.7;
  const HSeries s = relaxation_experiment(phi0, units, 0.1, 3, o);
  const double ref = 2 * (std::log(3.0) + 0.5 * std::log(1 / (2 * pi * 0.7)));
  CHECK(s.S_final == doctest::Approx(ref).epsilon(1e-12));
  CHECK(ln_path_count(0.7, units) == doctest::Approx(0.5 * std::log(1 / (2 * pi * 0.7))));
}

TEST_CASE("relaxation argument checks") {
  const Field f = cosine_density(32);
  CHECK_THROWS_AS(relaxation_experiment(f, UnitSystem{}, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(relaxation_experiment(f, UnitSystem{}, 0.0, 5), InvalidArgument);
  Field p = f;
  p.grid.boundary = Boundary::periodic;
  CHECK_THROWS_AS(relaxation_experiment(p, UnitSystem{}, 1.0, 5), InvalidArgument);
}

TEST_CASE("closed-bridge covariance of successive increments is exact") {
  // Each step of the bridge map is linear in the normals, so the covariance
  // of two increments is the dot product of their coefficient vectors.
  const double tau = 2.0, D = 0.35;
  for (std::size_t n : {4, 8, 16}) {
    const double dt = tau / double(n);
    std::vector<std::vector<double>> cols;
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> e(n, 0.0);
      e[j] = 1;
      cols.push_back(bridge_from_normals(e, 0.0, 0.0, tau, D));
    }
    for (std::size_t i = 1; i + 1 <= n - 1; ++i) {
      double cov = 0;
      for (const auto& c : cols) cov += (c[i + 1] - c[i]) * (c[i] - c[i - 1]);
      CHECK(cov == doctest::Approx(-2 * D * dt * dt / tau).epsilon(1e-12));
    }
  }
}

TEST_CASE("velocity correlation equals -1/(m beta)") {
  const UnitSystem units{1, 1.5, 1};
  for (double beta : {0.5, 1.0, 2.0, 100.0}) {
    const double tau = beta * units.hbar;
    RngStream rng(static_cast<std::uint64_t>(beta * 10), Stage::velocity_corr);
    for (std::size_t n : {4, 16}) {
      const VelocityCorrEstimate e = velocity_correlation(units, beta, tau / double(n), 20000, rng);
      const double ref = -1 / (units.mass * beta);
      CHECK(e.std_error > 0);
      CHECK(std::abs(e.value - ref) < 3 * e.std_error);
      CHECK(e.n_paths == 20000);
    }
  }
}

TEST_CASE("velocity correlation is reproducible and checks its step") {
  const UnitSystem units{};
  RngStream a(1), b(1);
  CHECK(velocity_correlation(units, 1, 0.25, 5000, a).value ==
        velocity_correlation(units, 1, 0.25, 5000, b).value);
  CHECK_THROWS_AS(velocity_correlation(units, 1, 0.6, 100, a), InvalidArgument);
  CHECK_THROWS_AS(velocity_correlation(units, 1, 0.3, 100, a), InvalidArgument);
  CHECK_THROWS_AS(velocity_correlation(units, 1, 0.0, 100, a), InvalidArgument);
  CHECK_THROWS_AS(velocity_correlation(units, -1, 0.25, 100, a), InvalidArgument);
}

TEST_CASE("ballistic paths have positive velocity products") {
  Path p;
  for (int i = 0; i <= 10; ++i) {
    p.times.push_back(0.1 * i);
    p.positions.push_back(2.0 + 3.0 * 0.1 * i);
  }
  CHECK(mean_velocity_product(p) == doctest::Approx(9.0));
  CHECK(mean_velocity_product(p) > 0);
}

}  // TEST_SUITE
