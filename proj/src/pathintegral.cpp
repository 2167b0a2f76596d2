#include "paththerm/pathintegral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "paththerm/error.hpp"
#include "paththerm/parallel.hpp"
#include "paththerm/simd/kernels.hpp"

namespace paththerm {

namespace {

constexpr std::size_t block_paths = 4096;

// Fills a standard closed bridge (variance rate 1, unit duration) pinned at 0.
void standard_bridge(StandardNormal& normal, RngStream& rng,
                     std::vector<double>& z, std::vector<double>& out) {
  for (auto& v : z) v = normal(rng);
  out.resize(z.size() + 1);
  bridge_from_normals(z, 0.0, 0.0, 1.0, 0.5, out);
}

// Trapezoid integral over unit time of u(offset + slope * s + scale * shape(s)).
double shaped_integral(const Potential& u, std::span<const double> shape, double offset,
                       double slope, double scale, std::vector<double>& buffer) {
  const std::size_t n = shape.size();
  buffer.resize(n);
  const double inv = 1.0 / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k)
    buffer[k] = offset + slope * (static_cast<double>(k) * inv) + scale * shape[k];
  return potential_integral(buffer, 1.0, u);
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased sample variance
};

Moments moments(const std::vector<double>& v) {
  const auto& k = simd::active();
  Moments m;
  const double n = static_cast<double>(v.size());
  m.mean = k.sum(v.data(), v.size()) / n;
  std::vector<double> d(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) d[i] = v[i] - m.mean;
  m.variance = v.size() > 1 ? k.dot(d.data(), d.data(), d.size()) / (n - 1.0) : 0.0;
  return m;
}

// exp of log-weights shifted by their maximum; returns the shift.
double stabilised_weights(const std::vector<double>& log_w, std::vector<double>& w) {
  const double shift = *std::max_element(log_w.begin(), log_w.end());
  w.resize(log_w.size());
  for (std::size_t i = 0; i < log_w.size(); ++i) w[i] = std::exp(log_w[i] - shift);
  return shift;
}

double checked_exp(double x, const char* what) {
  if (x > 700.0) {
    std::ostringstream os;
    os << what << ": Feynman-Kac weight overflow (log weight " << x << ")";
    throw NumericalFailure(os.str());
  }
  return std::exp(x);
}

std::vector<double> quadrature_nodes(const Grid1D& grid, std::size_t nq) {
  std::vector<double> xs(nq);
  const double w = grid.length() / static_cast<double>(nq);
  for (std::size_t j = 0; j < nq; ++j) xs[j] = grid.x_min + (static_cast<double>(j) + 0.5) * w;
  return xs;
}

// Closed-bridge weights exp(-(1/hbar) int u) at node x0 for each window in
// `taus`, reusing one set of bridge shapes for all windows.
std::vector<std::vector<double>> closed_log_weights(const Potential& u, double x0,
                                                    std::span<const double> taus,
                                                    const UnitSystem& units, std::size_t n_paths,
                                                    std::size_t n_steps, const RngStream& stream) {
  std::vector<std::vector<double>> log_w(taus.size(), std::vector<double>(n_paths));
  const double D = units.diffusion();
  const std::size_t n_blocks = (n_paths + block_paths - 1) / block_paths;
  parallel_for(n_blocks, [&](std::size_t b) {
    RngStream rng = stream.fork(b);
    StandardNormal normal;
    std::vector<double> z(n_steps), shape, buffer;
    const std::size_t end = std::min(n_paths, (b + 1) * block_paths);
    for (std::size_t p = b * block_paths; p < end; ++p) {
      standard_bridge(normal, rng, z, shape);
      for (std::size_t t = 0; t < taus.size(); ++t) {
        const double tau = taus[t];
        const double scale = std::sqrt(2.0 * D * tau);
        log_w[t][p] = -tau * shaped_integral(u, shape, x0, 0.0, scale, buffer) / units.hbar;
      }
    }
  });
  return log_w;
}

void check_partition_args(const Grid1D& grid, double tau, const UnitSystem& units,
                          const PartitionOptions& opts) {
  grid.validate();
  units.validate();
  require(tau > 0.0 && std::isfinite(tau), "partition function needs tau > 0");
  require(opts.n_paths >= 2, "need at least 2 paths per node");
  require(opts.n_quadrature >= 1, "need at least one quadrature node");
}

}  // namespace

double potential_integral(std::span<const double> positions, double duration, const Potential& u) {
  const std::size_t n = positions.size();
  if (n < 2) return 0.0;
  const double dt = duration / static_cast<double>(n - 1);
  if (const auto* h = std::get_if<potential::Harmonic>(&u)) {
    const double s = simd::active().trapezoid_sq_offset(positions.data(), n, h->center);
    return 0.5 * h->mass * h->omega * h->omega * s * dt;
  }
  if (const auto* c = std::get_if<potential::Constant>(&u)) return c->c * duration;
  if (std::holds_alternative<potential::Free>(u)) return 0.0;
  double s = 0.5 * (eval_potential(u, positions[0]) + eval_potential(u, positions[n - 1]));
  for (std::size_t k = 1; k + 1 < n; ++k) s += eval_potential(u, positions[k]);
  return s * dt;
}

ActionValue action(const Path& path, const Potential& u, const UnitSystem& units) {
  units.validate();
  path.validate();
  require(path.size() >= 2, "action needs a path with at least 2 samples");
  double kinetic = 0.0;
  double pot = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double dt = path.times[i + 1] - path.times[i];
    const double dx = path.positions[i + 1] - path.positions[i];
    kinetic += units.mass * dx * dx / (2.0 * dt);
    pot += 0.5 * (eval_potential(u, path.positions[i]) + eval_potential(u, path.positions[i + 1])) *
           dt;
  }
  return ActionValue{kinetic + pot};
}

double free_kernel(double x0, double x1, double tau, const UnitSystem& units) {
  require(tau > 0.0, "free kernel needs tau > 0");
  const double four_dt = 4.0 * units.diffusion() * tau;
  const double d = x1 - x0;
  return std::exp(-d * d / four_dt) / std::sqrt(std::numbers::pi * four_dt);
}

std::size_t default_time_steps(double tau) {
  const double target = tau / 256.0;
  return std::max<std::size_t>(64, static_cast<std::size_t>(std::llround(tau / target)));
}

MCEstimate estimate_q_mc(double x0, double x1, double tau, const Potential& u,
                         const UnitSystem& units, std::size_t n_paths, std::size_t n_steps,
                         RngStream& rng) {
  units.validate();
  validate_potential(u);
  require(tau > 0.0 && std::isfinite(tau), "estimate_q_mc needs tau > 0");
  require(n_paths >= 2, "estimate_q_mc needs at least 2 paths");
  if (n_steps == 0) n_steps = default_time_steps(tau);
  require(n_steps >= 1, "estimate_q_mc needs at least 1 step");
  const double free = free_kernel(x0, x1, tau, units);

  if (is_path_independent(u)) {
    const double w = checked_exp(-eval_potential(u, x0) * tau / units.hbar, "estimate_q_mc");
    return MCEstimate{free * w, 0.0, n_paths};
  }

  const RngStream stream = rng.split();
  const double scale = std::sqrt(2.0 * units.diffusion() * tau);
  std::vector<double> log_w(n_paths);
  const std::size_t n_blocks = (n_paths + block_paths - 1) / block_paths;
  parallel_for(n_blocks, [&](std::size_t b) {
    RngStream r = stream.fork(b);
    StandardNormal normal;
    std::vector<double> z(n_steps), shape, buffer;
    const std::size_t end = std::min(n_paths, (b + 1) * block_paths);
    for (std::size_t p = b * block_paths; p < end; ++p) {
      standard_bridge(normal, r, z, shape);
      log_w[p] = -tau * shaped_integral(u, shape, x0, x1 - x0, scale, buffer) / units.hbar;
    }
  });
  std::vector<double> w;
  const double shift = stabilised_weights(log_w, w);
  const Moments m = moments(w);
  const double factor = free * checked_exp(shift, "estimate_q_mc");
  return MCEstimate{factor * m.mean, factor * std::sqrt(m.variance / double(n_paths)), n_paths};
}

MCEstimate z_path(const Potential& u, const Grid1D& grid, double tau, const UnitSystem& units,
                  const PartitionOptions& opts, RngStream& rng) {
  check_partition_args(grid, tau, units, opts);
  validate_potential(u);
  const std::size_t n_steps = opts.n_steps ? opts.n_steps : default_time_steps(tau);
  const auto nodes = quadrature_nodes(grid, opts.n_quadrature);
  const double hq = grid.length() / static_cast<double>(opts.n_quadrature);
  const double free = free_kernel(0.0, 0.0, tau, units);
  const RngStream base = opts.common_random_numbers ? rng : rng.split();

  double z = 0.0;
  double var = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    if (is_path_independent(u)) {
      z += hq * free * checked_exp(-eval_potential(u, nodes[j]) * tau / units.hbar, "z_path");
      continue;
    }
    const double taus[] = {tau};
    const auto log_w =
        closed_log_weights(u, nodes[j], taus, units, opts.n_paths, n_steps, base.fork(j));
    std::vector<double> w(opts.n_paths);
    for (std::size_t p = 0; p < w.size(); ++p) w[p] = checked_exp(log_w[0][p], "z_path");
    const Moments m = moments(w);
    z += hq * free * m.mean;
    var += hq * hq * free * free * m.variance / double(opts.n_paths);
  }
  return MCEstimate{z, std::sqrt(var), opts.n_paths * nodes.size()};
}

MCEstimate dlnz_dtau(const Potential& u, const Grid1D& grid, double tau, const UnitSystem& units,
                     const PartitionOptions& opts, RngStream& rng) {
  check_partition_args(grid, tau, units, opts);
  validate_potential(u);
  require(opts.epsilon > 0.0 && opts.epsilon < 0.5, "dlnz_dtau epsilon must be in (0, 0.5)");
  const double tp = tau * (1.0 + opts.epsilon);
  const double tm = tau * (1.0 - opts.epsilon);
  const std::size_t n_steps = opts.n_steps ? opts.n_steps : default_time_steps(tau);
  const auto nodes = quadrature_nodes(grid, opts.n_quadrature);
  const double hq = grid.length() / static_cast<double>(opts.n_quadrature);
  const double kp = free_kernel(0.0, 0.0, tp, units);
  const double km = free_kernel(0.0, 0.0, tm, units);
  const RngStream base = opts.common_random_numbers ? rng : rng.split();

  double zp = 0.0, zm = 0.0, var_diff = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    if (is_path_independent(u)) {
      const double v = eval_potential(u, nodes[j]) / units.hbar;
      zp += hq * kp * checked_exp(-v * tp, "dlnz_dtau");
      zm += hq * km * checked_exp(-v * tm, "dlnz_dtau");
      continue;
    }
    const double taus[] = {tp, tm};
    const auto log_w =
        closed_log_weights(u, nodes[j], taus, units, opts.n_paths, n_steps, base.fork(j));
    std::vector<double> a(opts.n_paths), b(opts.n_paths), d(opts.n_paths);
    for (std::size_t p = 0; p < opts.n_paths; ++p) {
      a[p] = kp * checked_exp(log_w[0][p], "dlnz_dtau");
      b[p] = km * checked_exp(log_w[1][p], "dlnz_dtau");
      d[p] = a[p] - b[p];
    }
    zp += hq * moments(a).mean;
    zm += hq * moments(b).mean;
    var_diff += hq * hq * moments(d).variance / double(opts.n_paths);
  }
  if (!(zp > 0.0 && zm > 0.0)) throw NumericalFailure("dlnz_dtau: partition function underflow");
  const double width = tp - tm;
  MCEstimate out;
  out.mean = (std::log(zp) - std::log(zm)) / width;
  out.std_error = std::sqrt(var_diff) / (0.5 * (zp + zm) * width);
  out.n_samples = opts.n_paths * nodes.size();
  if (opts.max_rel_std_error > 0.0 && out.std_error > opts.max_rel_std_error * std::abs(out.mean)) {
    std::ostringstream os;
    os << "dlnz_dtau: Monte Carlo noise " << out.std_error << " exceeds requested relative tolerance "
       << opts.max_rel_std_error << " of |" << out.mean << "|; increase n_paths";
    throw PrecisionFailure(os.str());
  }
  return out;
}

}  // namespace paththerm
