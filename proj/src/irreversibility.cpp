#include "paththerm/irreversibility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "paththerm/error.hpp"
#include "paththerm/parallel.hpp"
#include "paththerm/simd/kernels.hpp"

namespace paththerm {

namespace {

constexpr std::size_t block_paths = 4096;

double max_value(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

}  // namespace

double h_functional(const Field& phi, double V) {
  phi.validate();
  require(V > 0.0 && std::isfinite(V), "h_functional needs a positive volume");
  const double peak = max_value(phi.values);
  for (double v : phi.values)
    require(v >= -1e-12 * std::max(peak, 1.0), "h_functional needs a non-negative density");
  const double mass = phi.integral();
  if (std::abs(mass - 1.0) > 1e-6) {
    std::ostringstream os;
    os << "h_functional needs a normalised density; integral is " << mass;
    throw InvalidArgument(os.str());
  }
  // Evaluated on phi / mass: identical for exact densities, and free of the
  // -delta offset a mass error delta would otherwise add to H.
  const double inv = 1.0 / mass;
  double s = 0.0;
  for (double v : phi.values)
    if (v > 0.0) s += v * inv * std::log(v * inv);
  return -s * phi.grid.h() - std::log(V);
}

double h_rate(const Field& phi, const UnitSystem& units, double floor_rel) {
  phi.validate();
  units.validate();
  const auto& f = phi.values;
  const std::size_t n = f.size();
  const double h = phi.grid.h();
  const double floor = floor_rel * max_value(f);
  const bool periodic = phi.grid.boundary == Boundary::periodic;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(f[i] > floor) || f[i] <= 0.0) continue;
    const double left = i > 0 ? f[i - 1] : (periodic ? f[n - 1] : f[0]);
    const double right = i + 1 < n ? f[i + 1] : (periodic ? f[0] : f[n - 1]);
    const double g = (right - left) / (2.0 * h);
    s += g * g / f[i];
  }
  return units.diffusion() * s * h;
}

double ln_path_count(double tau, const UnitSystem& units) {
  require(tau > 0.0, "path count needs tau > 0");
  return 0.5 * std::log(units.mass / (2.0 * std::numbers::pi * units.hbar * tau));
}

HSeries relaxation_experiment(const Field& phi0, const UnitSystem& units, double t_end,
                              std::size_t n_snapshots, const RelaxationOptions& opts) {
  units.validate();
  phi0.validate();
  require(phi0.grid.boundary == Boundary::reflecting, "relaxation runs in a reflecting box");
  require(n_snapshots >= 2, "relaxation needs at least 2 snapshots");
  require(t_end > phi0.t, "relaxation needs t_end > phi0.t");
  require(phi0.is_probability_density(1e-6), "relaxation needs a normalised initial density");
  const double V = phi0.grid.length();
  const double ln_gamma = ln_path_count(opts.tau, units);

  HSeries out;
  out.times.resize(n_snapshots);
  out.H.resize(n_snapshots);
  out.H_rate.resize(n_snapshots);
  out.S_total.resize(n_snapshots);

  Field phi = phi0;
  SolverOptions solver = opts.solver;
  const double span = t_end - phi0.t;
  double eps_mono = 0.0;
  for (std::size_t k = 0; k < n_snapshots; ++k) {
    const double t = k + 1 == n_snapshots
                         ? t_end
                         : phi0.t + span * static_cast<double>(k) / double(n_snapshots - 1);
    if (k > 0) {
      phi = evolve_forward(phi, potential::Free{}, units, t, solver);
      solver.startup_substeps = 0;  // only the initial data is rough
    }
    out.times[k] = t;
    out.H[k] = h_functional(phi, V);
    out.H_rate[k] = h_rate(phi, units);
    out.S_total[k] = units.kB * (out.H[k] + std::log(V) + ln_gamma);
    if (k == 0) {
      eps_mono = opts.mono_rel * std::abs(out.H[0]) +
                 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(std::log(V)));
    } else if (out.H[k] < out.H[k - 1] - eps_mono) {
      std::ostringstream os;
      os.precision(17);
      os << "H decreased between t = " << out.times[k - 1] << " and t = " << t << ": "
         << out.H[k - 1] << " -> " << out.H[k];
      throw NumericalFailure(os.str());
    }
  }
  out.S_final = out.S_total.back();
  return out;
}

double mean_velocity_product(const Path& path) {
  path.validate();
  require(path.size() >= 3, "velocity product needs at least 3 samples");
  double s = 0.0;
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    const double vp = (path.positions[i + 1] - path.positions[i]) / (path.times[i + 1] - path.times[i]);
    const double vm = (path.positions[i] - path.positions[i - 1]) / (path.times[i] - path.times[i - 1]);
    s += vp * vm;
  }
  return s / static_cast<double>(path.size() - 2);
}

VelocityCorrEstimate velocity_correlation(const UnitSystem& units, double beta, double delta_t,
                                          std::size_t n_paths, RngStream& rng) {
  units.validate();
  require(beta > 0.0 && std::isfinite(beta), "velocity_correlation needs beta > 0");
  require(n_paths >= 2, "velocity_correlation needs at least 2 paths");
  const double tau = beta * units.hbar;
  require(delta_t > 0.0 && delta_t <= 0.5 * tau * (1.0 + 1e-12),
          "velocity_correlation needs 0 < delta_t <= tau / 2");
  const double ratio = tau / delta_t;
  const auto n_steps = static_cast<std::size_t>(std::llround(ratio));
  require(std::abs(ratio - double(n_steps)) <= 1e-9 * ratio,
          "velocity_correlation needs tau / delta_t to be an integer");

  const RngStream stream = rng.split();
  const double D = units.diffusion();
  std::vector<double> per_path(n_paths);
  const std::size_t n_blocks = (n_paths + block_paths - 1) / block_paths;
  parallel_for(n_blocks, [&](std::size_t b) {
    RngStream r = stream.fork(b);
    StandardNormal normal;
    std::vector<double> z(n_steps), x(n_steps + 1);
    const std::size_t end = std::min(n_paths, (b + 1) * block_paths);
    for (std::size_t p = b * block_paths; p < end; ++p) {
      for (auto& v : z) v = normal(r);
      bridge_from_normals(z, 0.0, 0.0, tau, D, x);
      double s = 0.0;
      for (std::size_t i = 1; i < n_steps; ++i) s += (x[i + 1] - x[i]) * (x[i] - x[i - 1]);
      per_path[p] = s / (double(n_steps - 1) * delta_t * delta_t);
    }
  });

  const auto& k = simd::active();
  const double n = static_cast<double>(n_paths);
  const double mean = k.sum(per_path.data(), n_paths) / n;
  for (auto& v : per_path) v -= mean;
  const double var = k.dot(per_path.data(), per_path.data(), n_paths) / (n - 1.0);
  return VelocityCorrEstimate{delta_t, mean, std::sqrt(var / n), beta, n_paths};
}

}  // namespace paththerm
