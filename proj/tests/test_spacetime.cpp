#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "paththerm/error.hpp"
#include "paththerm/spacetime.hpp"

using namespace paththerm;

namespace {

struct Stats {
  double mean = 0, var = 0, skew = 0, exkurt = 0;
};

Stats stats(const std::vector<double>& v) {
  const double n = double(v.size());
  Stats s;
  for (double x : v) s.mean += x;
  s.mean /= n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double x : v) {
    const double d = x - s.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  s.var = m2 * n / (n - 1);
  s.skew = m3 / std::pow(m2, 1.5);
  s.exkurt = m4 / (m2 * m2) - 3.0;
  return s;
}

}  // namespace

TEST_SUITE("spacetime") {

TEST_CASE("lattice step sizes follow dx^2/dt = hbar/m") {
  CHECK(make_lattice(UnitSystem{1, 1, 1}, 1.0).dt == 1.0);
  CHECK(make_lattice(UnitSystem{1, 2, 1}, 1.0).dt == 2.0);
  CHECK(make_lattice(UnitSystem{1, 1, 1}, 0.1).dt == doctest::Approx(0.01).epsilon(1e-15));

  for (const UnitSystem u : {UnitSystem{1, 1, 1}, UnitSystem{0.7, 3.1, 2.0}, UnitSystem{2.5, 0.2, 1}}) {
    for (double dx : {1.0, 0.1, 0.037, 4.0}) {
      const Lattice l = make_lattice(u, dx);
      const double eps = std::numeric_limits<double>::epsilon();
      CHECK(std::abs(l.dt * u.hbar - u.mass * dx * dx) <= 4 * eps * u.mass * dx * dx);
      CHECK(dx * l.momentum_quantum(u.mass) == doctest::Approx(u.hbar).epsilon(1e-14));
      CHECK(l.energy_quantum(u.mass) * l.dt == doctest::Approx(u.hbar / 2).epsilon(1e-14));
    }
  }
}

TEST_CASE("invalid arguments are rejected") {
  CHECK_THROWS_AS(make_lattice(UnitSystem{}, 0.0), InvalidArgument);
  CHECK_THROWS_AS(make_lattice(UnitSystem{}, -1.0), InvalidArgument);
  CHECK_THROWS_AS(make_lattice(UnitSystem{1, 0, 1}, 1.0), InvalidArgument);
  CHECK_THROWS_AS((Grid1D{1, 0, 8}.validate()), InvalidArgument);
  CHECK_THROWS_AS((Grid1D{0, 1, 1}.validate()), InvalidArgument);
  CHECK_THROWS_AS(validate_potential(potential::Harmonic{0.0}), InvalidArgument);
  CHECK_THROWS_AS(validate_potential(potential::Tabulated{{0, 1}, {0, NAN}}), InvalidArgument);
  RngStream rng(1);
  CHECK_THROWS_AS(sample_closed_bridge(UnitSystem{}, 0, 0.0, 8, rng), InvalidArgument);
  CHECK_THROWS_AS(sample_closed_bridge(UnitSystem{}, 0, 1.0, 1, rng), InvalidArgument);
}

TEST_CASE("lattice walk steps are nearest-neighbour jumps") {
  const UnitSystem units{1, 2, 1};
  const Lattice l = make_lattice(units, 0.25);
  RngStream rng(7);
  const Path empty = sample_lattice_walk(l, 0, 1.5, rng);
  REQUIRE(empty.size() == 1);
  CHECK(empty.positions[0] == 1.5);

  const Path p = sample_lattice_walk(l, 500, 0.0, rng);
  p.validate();
  CHECK(p.duration() == doctest::Approx(500 * l.dt));
  for (std::size_t i = 1; i < p.size(); ++i) {
    CHECK(std::abs(std::abs(p.positions[i] - p.positions[i - 1]) - l.dx) < 1e-12);
    const double v = (p.positions[i] - p.positions[i - 1]) / l.dt;
    CHECK(0.5 * units.mass * v * v * l.dt == doctest::Approx(units.hbar / 2));
  }
}

TEST_CASE("walk ensemble: zero mean and variance 2Dt") {
  const UnitSystem units{1.3, 0.6, 1};
  const Lattice l = make_lattice(units, 0.05);
  const std::size_t n_walks = 100000, n_steps = 100;
  RngStream rng(11);
  std::vector<double> d(n_walks);
  for (auto& x : d) x = sample_lattice_displacement(l, n_steps, rng);
  const Stats s = stats(d);
  const double t = double(n_steps) * l.dt;
  CHECK(std::abs(s.mean) < 3 * std::sqrt(s.var / double(n_walks)));
  CHECK(s.var == doctest::Approx(2 * units.diffusion() * t).epsilon(0.02));
}

TEST_CASE("displacement sampler agrees with the explicit walk") {
  const Lattice l = make_lattice(UnitSystem{}, 1.0);
  RngStream a(3), b(3);
  for (std::size_t n : {1, 63, 64, 65, 200}) {
    const Path p = sample_lattice_walk(l, n, 0.0, a);
    CHECK(sample_lattice_displacement(l, n, b) == p.positions.back());
  }
}

TEST_CASE("long walks are Gaussian") {
  const Lattice l = make_lattice(UnitSystem{}, 1.0);
  RngStream rng(5);
  std::vector<double> d(100000);
  for (auto& x : d) x = sample_lattice_displacement(l, 10000, rng);
  const Stats s = stats(d);
  CHECK(std::abs(s.skew) < 0.05);
  CHECK(std::abs(s.exkurt) < 0.1);
}

TEST_CASE("closed bridge is pinned and reproducible") {
  const UnitSystem units{1, 1, 1};
  RngStream a(42), b(42);
  const Path p = sample_closed_bridge(units, 0.3, 2.0, 16, a);
  const Path q = sample_closed_bridge(units, 0.3, 2.0, 16, b);
  p.validate();
  CHECK(p.closed);
  CHECK(p.positions.front() == 0.3);
  CHECK(p.positions.back() == 0.3);
  CHECK(p.times.back() == 2.0);
  CHECK(p.positions == q.positions);
}

TEST_CASE("bridge variance profile 2D s(tau - s)/tau") {
  const UnitSystem units{1, 0.5, 1};
  const double tau = 1.5, D = units.diffusion();
  const std::size_t n_steps = 8, n = 100000;
  RngStream rng(9);
  std::vector<std::vector<double>> cols(n_steps + 1, std::vector<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const Path p = sample_closed_bridge(units, -0.2, tau, n_steps, rng);
    for (std::size_t i = 0; i <= n_steps; ++i) cols[i][k] = p.positions[i] + 0.2;
  }
  for (std::size_t i = 1; i < n_steps; ++i) {
    const double s = tau * double(i) / double(n_steps);
    CHECK(stats(cols[i]).var == doctest::Approx(2 * D * s * (tau - s) / tau).epsilon(0.02));
  }

  std::vector<double> mid(n);
  for (auto& x : mid) x = sample_closed_bridge(units, 0.0, tau, 2, rng).positions[1];
  CHECK(stats(mid).var == doctest::Approx(D * tau / 2).epsilon(0.02));
}

TEST_CASE("bridge map has the exact Brownian-bridge covariance") {
  // The map is linear, so its covariance is sum_k b(e_k) b(e_k)^T.
  const double tau = 2.0, D = 0.7;
  const std::size_t n = 12;
  std::vector<std::vector<double>> images;
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> e(n, 0.0);
    e[k] = 1.0;
    images.push_back(bridge_from_normals(e, 0.0, 0.0, tau, D));
  }
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= n; ++j) {
      double c = 0;
      for (const auto& b : images) c += b[i] * b[j];
      const double s = tau * double(i) / n, t = tau * double(j) / n;
      CHECK(c == doctest::Approx(2 * D * std::min(s, t) * (tau - std::max(s, t)) / tau)
                     .epsilon(1e-12)
                     .scale(1.0));
    }
  }
}

TEST_CASE("pinned bridge mean interpolates the end points") {
  std::vector<double> zero(10, 0.0);
  const auto x = bridge_from_normals(zero, 1.0, 3.0, 1.0, 0.5);
  for (std::size_t i = 0; i <= 10; ++i) CHECK(x[i] == doctest::Approx(1.0 + 0.2 * double(i)));
}

TEST_CASE("potential evaluation") {
  CHECK(eval_potential(potential::Harmonic{1, 0, 1}, 0.0) == 0.0);
  CHECK(eval_potential(potential::Harmonic{1, 0, 1}, 1.0) == 0.5);
  CHECK(eval_potential(potential::Harmonic{2, 1, 3}, 2.0) == doctest::Approx(6.0));
  CHECK(eval_potential(potential::Free{}, 123.0) == 0.0);
  CHECK(eval_potential(potential::Constant{2.5}, -4.0) == 2.5);
  const potential::Tabulated t{{0, 1, 3}, {1, 3, -1}};
  CHECK(eval_potential(t, 0.5) == doctest::Approx(2.0));
  CHECK(eval_potential(t, 2.0) == doctest::Approx(1.0));
  CHECK(eval_potential(t, -5.0) == 1.0);
  CHECK(eval_potential(t, 9.0) == -1.0);
  CHECK(is_path_independent(potential::Free{}));
  CHECK(is_path_independent(potential::Constant{1}));
  CHECK_FALSE(is_path_independent(potential::Harmonic{}));
}

TEST_CASE("grid geometry") {
  const Grid1D g{-1, 3, 8};
  g.validate();
  CHECK(g.h() == 0.5);
  CHECK(g.length() == 4.0);
  CHECK(g.x(0) == -0.75);
  CHECK(g.centers().back() == 2.75);
}

TEST_CASE("path validation") {
  Path p{{0, 1, 1}, {0, 1, 2}, false};
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  Path closed{{0, 1, 2}, {0, 1, 0.5}, true};
  CHECK_THROWS_AS(closed.validate(), InvalidArgument);
}

}  // TEST_SUITE
