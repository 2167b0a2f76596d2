#include "paththerm/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "paththerm/error.hpp"
#include "paththerm/simd/kernels.hpp"

namespace paththerm {

double diffusion_time_tolerance(double t) { return 1e-12 * std::max(1.0, std::abs(t)); }

void Field::validate() const {
  grid.validate();
  require(values.size() == grid.n_cells, "field size does not match its grid");
  for (double v : values) require(std::isfinite(v), "field contains non-finite values");
}

double Field::integral() const {
  return simd::active().sum(values.data(), values.size()) * grid.h();
}

bool Field::is_probability_density(double tol) const {
  for (double v : values)
    if (!(v >= 0.0)) return false;
  return std::abs(integral() - 1.0) <= tol;
}

Field Field::normalized() const {
  const double m = integral();
  if (!(m > 0.0)) throw InvalidArgument("cannot normalise a field with non-positive integral");
  Field out = *this;
  for (auto& v : out.values) v /= m;
  return out;
}

namespace {

enum class Scheme { crank_nicolson, implicit_euler };

// One time step (I + theta dt A) phi_new = (I - (1 - theta) dt A) phi_old with
// A = -D lap + u / hbar. Reflecting walls use the zero-flux ghost-cell stencil,
// which keeps sum(phi) exactly conserved when u = 0.
class Stepper {
 public:
  Stepper(const Grid1D& grid, const std::vector<double>& u_old, const std::vector<double>& u_new,
          const UnitSystem& units, double dt, Scheme scheme)
      : n_(grid.n_cells), periodic_(grid.boundary == Boundary::periodic && grid.n_cells > 2) {
    const double h = grid.h();
    const double r = units.diffusion() / (h * h);
    const double theta = scheme == Scheme::crank_nicolson ? 0.5 : 1.0;
    explicit_ = scheme == Scheme::crank_nicolson;
    const bool walls = grid.boundary == Boundary::reflecting;
    // A two-cell periodic ring sees the same neighbour on both sides.
    const double off = (grid.boundary == Boundary::periodic && n_ == 2) ? 2.0 * r : r;

    // A = -D lap + u/hbar: off-diagonal -r, diagonal 2r (r at reflecting ends) + u/hbar.
    auto diag_a = [&](std::size_t i, const std::vector<double>& u) {
      const bool end = walls && (i == 0 || i + 1 == n_);
      return (end ? r : 2.0 * r) + u[i] / units.hbar;
    };

    lo_e_.assign(n_, 0.0);
    di_e_.assign(n_, 0.0);
    up_e_.assign(n_, 0.0);
    std::vector<double> lo_m(n_), di_m(n_), up_m(n_);
    const double ce = (1.0 - theta) * dt;
    const double cm = theta * dt;
    for (std::size_t i = 0; i < n_; ++i) {
      lo_e_[i] = ce * off;
      up_e_[i] = ce * off;
      di_e_[i] = 1.0 - ce * diag_a(i, u_old);
      lo_m[i] = -cm * off;
      up_m[i] = -cm * off;
      di_m[i] = 1.0 + cm * diag_a(i, u_new);
    }

    if (periodic_) {
      // Sherman-Morrison: M = M' + w v^T with the corner entries moved into w, v.
      const double a = lo_m[0];       // M[0][n-1]
      const double b = up_m[n_ - 1];  // M[n-1][0]
      const double gamma = -di_m[0];
      di_m[0] -= gamma;
      di_m[n_ - 1] -= a * b / gamma;
      v_last_ = a / gamma;
      factor(lo_m, di_m, up_m);
      corr_.assign(n_, 0.0);
      corr_[0] = gamma;
      corr_[n_ - 1] = b;
      simd::scalar_kernels().tridiag_solve(mult_.data(), inv_piv_.data(), up_.data(), corr_.data(),
                                           n_, 1);
      denom_ = 1.0 + corr_[0] + v_last_ * corr_[n_ - 1];
    } else {
      lo_e_[0] = lo_m[0] = 0.0;
      up_e_[n_ - 1] = up_m[n_ - 1] = 0.0;
      factor(lo_m, di_m, up_m);
    }
  }

  /// Advances a row-major n x width batch in place; `scratch` has the same size.
  void step(std::vector<double>& data, std::vector<double>& scratch, std::size_t width) const {
    const auto& k = simd::active();
    if (explicit_) {
      k.tridiag_apply(lo_e_.data(), di_e_.data(), up_e_.data(), data.data(), scratch.data(), n_,
                      width, periodic_);
      data.swap(scratch);
    }
    k.tridiag_solve(mult_.data(), inv_piv_.data(), up_.data(), data.data(), n_, width);
    if (!corr_.empty()) {
      const double* first = data.data();
      const double* last = data.data() + (n_ - 1) * width;
      coef_.resize(width);
      for (std::size_t j = 0; j < width; ++j) coef_[j] = (first[j] + v_last_ * last[j]) / denom_;
      for (std::size_t i = 0; i < n_; ++i)
        k.axpy(-corr_[i], coef_.data(), data.data() + i * width, width);
    }
  }

 private:
  void factor(const std::vector<double>& lo, const std::vector<double>& di,
              const std::vector<double>& up) {
    mult_.assign(n_, 0.0);
    inv_piv_.assign(n_, 0.0);
    up_ = up;
    double piv = di[0];
    inv_piv_[0] = 1.0 / piv;
    for (std::size_t i = 1; i < n_; ++i) {
      mult_[i] = lo[i] / piv;
      piv = di[i] - mult_[i] * up[i - 1];
      inv_piv_[i] = 1.0 / piv;
    }
  }

  std::size_t n_;
  bool periodic_;
  bool explicit_ = true;
  std::vector<double> lo_e_, di_e_, up_e_;
  std::vector<double> mult_, inv_piv_, up_;
  std::vector<double> corr_;
  double v_last_ = 0.0;
  double denom_ = 1.0;
  mutable std::vector<double> coef_;
};

void check_finite(const std::vector<double>& data, std::size_t step, double t) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      std::ostringstream os;
      os << "diffusion solver produced a non-finite value at step " << step << " (t = " << t
         << ", entry " << i << ")";
      throw NumericalFailure(os.str());
    }
  }
}

struct StepPlan {
  std::size_t n_steps = 0;
  double dt = 0.0;
};

StepPlan plan_steps(double duration, const SolverOptions& opts) {
  require(opts.dt > 0.0 && std::isfinite(opts.dt), "solver dt must be positive");
  StepPlan p;
  if (duration <= 0.0) return p;
  p.n_steps = static_cast<std::size_t>(std::ceil(duration / opts.dt * (1.0 - 1e-12)));
  p.n_steps = std::max<std::size_t>(p.n_steps, 1);
  p.dt = duration / static_cast<double>(p.n_steps);
  return p;
}

// Static potential: factor once, reuse for every step and column.
void propagate_static(std::vector<double>& data, std::size_t width, const Grid1D& grid,
                      const Potential& u, const UnitSystem& units, double t_begin,
                      double duration, const SolverOptions& opts) {
  const simd::FlushDenormals ftz;
  const StepPlan plan = plan_steps(duration, opts);
  if (plan.n_steps == 0) return;
  const auto uv = sample_potential(u, grid);
  std::vector<double> scratch(data.size());
  std::size_t first = 0;
  if (opts.startup_substeps > 0) {
    const double sub = plan.dt / static_cast<double>(opts.startup_substeps);
    const Stepper be(grid, uv, uv, units, sub, Scheme::implicit_euler);
    for (std::size_t s = 0; s < opts.startup_substeps; ++s) be.step(data, scratch, width);
    first = 1;
  }
  const Stepper cn(grid, uv, uv, units, plan.dt, Scheme::crank_nicolson);
  for (std::size_t s = first; s < plan.n_steps; ++s) {
    cn.step(data, scratch, width);
    if ((s & 255U) == 255U) check_finite(data, s, t_begin + plan.dt * double(s + 1));
  }
  check_finite(data, plan.n_steps, t_begin + duration);
}

// Time-dependent potential sampled as u(time_of(s), x) where s is the step clock.
template <class TimeMap>
void propagate_dynamic(std::vector<double>& data, const Grid1D& grid,
                       const TimeDependentPotential& u, const UnitSystem& units, double duration,
                       const SolverOptions& opts, TimeMap time_of) {
  const simd::FlushDenormals ftz;
  const StepPlan plan = plan_steps(duration, opts);
  if (plan.n_steps == 0) return;
  std::vector<double> scratch(data.size());
  const auto xs = grid.centers();
  auto sample = [&](double s) {
    std::vector<double> v(grid.n_cells);
    const double t = time_of(s);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = u(t, xs[i]);
    return v;
  };
  std::size_t first = 0;
  if (opts.startup_substeps > 0) {
    const double sub = plan.dt / static_cast<double>(opts.startup_substeps);
    for (std::size_t s = 0; s < opts.startup_substeps; ++s) {
      const auto un = sample(sub * double(s + 1));
      Stepper(grid, un, un, units, sub, Scheme::implicit_euler).step(data, scratch, 1);
    }
    first = 1;
  }
  for (std::size_t s = first; s < plan.n_steps; ++s) {
    const auto uo = sample(plan.dt * double(s));
    const auto un = sample(plan.dt * double(s + 1));
    Stepper(grid, uo, un, units, plan.dt, Scheme::crank_nicolson).step(data, scratch, 1);
  }
  check_finite(data, plan.n_steps, time_of(duration));
}

void check_inputs(const Field& f, const UnitSystem& units) {
  units.validate();
  f.validate();
}

}  // namespace

Field evolve_forward(const Field& phi0, const Potential& u, const UnitSystem& units, double t_end,
                     const SolverOptions& opts) {
  check_inputs(phi0, units);
  validate_potential(u);
  const double duration = t_end - phi0.t;
  require(duration >= -diffusion_time_tolerance(t_end), "evolve_forward requires t_end >= phi0.t");
  Field out{phi0.grid, t_end, phi0.values};
  if (duration > diffusion_time_tolerance(t_end))
    propagate_static(out.values, 1, out.grid, u, units, phi0.t, duration, opts);
  return out;
}

Field evolve_forward(const Field& phi0, const TimeDependentPotential& u, const UnitSystem& units,
                     double t_end, const SolverOptions& opts) {
  check_inputs(phi0, units);
  require(static_cast<bool>(u), "time-dependent potential is empty");
  const double duration = t_end - phi0.t;
  require(duration >= -diffusion_time_tolerance(t_end), "evolve_forward requires t_end >= phi0.t");
  Field out{phi0.grid, t_end, phi0.values};
  if (duration > diffusion_time_tolerance(t_end)) {
    const double t0 = phi0.t;
    propagate_dynamic(out.values, out.grid, u, units, duration, opts,
                      [t0](double s) { return t0 + s; });
  }
  return out;
}

Field evolve_backward(const Field& phihat1, const Potential& u, const UnitSystem& units,
                      double t_start, const SolverOptions& opts) {
  check_inputs(phihat1, units);
  validate_potential(u);
  const double duration = phihat1.t - t_start;
  require(duration >= -diffusion_time_tolerance(t_start),
          "evolve_backward requires t_start <= phihat1.t");
  Field out{phihat1.grid, t_start, phihat1.values};
  if (duration > diffusion_time_tolerance(t_start))
    propagate_static(out.values, 1, out.grid, u, units, t_start, duration, opts);
  return out;
}

Field evolve_backward(const Field& phihat1, const TimeDependentPotential& u,
                      const UnitSystem& units, double t_start, const SolverOptions& opts) {
  check_inputs(phihat1, units);
  require(static_cast<bool>(u), "time-dependent potential is empty");
  const double duration = phihat1.t - t_start;
  require(duration >= -diffusion_time_tolerance(t_start),
          "evolve_backward requires t_start <= phihat1.t");
  Field out{phihat1.grid, t_start, phihat1.values};
  if (duration > diffusion_time_tolerance(t_start)) {
    const double t1 = phihat1.t;
    propagate_dynamic(out.values, out.grid, u, units, duration, opts,
                      [t1](double s) { return t1 - s; });
  }
  return out;
}

Kernel identity_kernel(const Grid1D& grid, double t) {
  grid.validate();
  Kernel k{grid, t, t, std::vector<double>(grid.n_cells * grid.n_cells, 0.0)};
  const double inv_h = 1.0 / grid.h();
  for (std::size_t i = 0; i < grid.n_cells; ++i) k(i, i) = inv_h;
  return k;
}

Kernel kernel(const Grid1D& grid, const Potential& u, const UnitSystem& units, double t0,
              double t1, const SolverOptions& opts) {
  grid.validate();
  units.validate();
  validate_potential(u);
  require(t1 >= t0 - diffusion_time_tolerance(t1), "kernel requires t1 >= t0");
  if (t1 - t0 <= diffusion_time_tolerance(t1)) return identity_kernel(grid, t0);

  // Batch layout: state[x * n + y] is column y (source cell) at target x, so
  // each grid row holds all sources side by side for the row-wise kernels.
  const std::size_t n = grid.n_cells;
  std::vector<double> state(n * n, 0.0);
  const double inv_h = 1.0 / grid.h();
  for (std::size_t i = 0; i < n; ++i) state[i * n + i] = inv_h;
  propagate_static(state, n, grid, u, units, t0, t1 - t0, opts);

  Kernel k{grid, t0, t1, std::vector<double>(n * n)};
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) k.entries[y * n + x] = state[x * n + y];
  return k;
}

Kernel compose_kernels(const Kernel& k_ab, const Kernel& k_bc) {
  if (!(k_ab.grid == k_bc.grid)) throw InvalidArgument("compose_kernels: kernels use different grids");
  if (std::abs(k_ab.t1 - k_bc.t0) > diffusion_time_tolerance(k_ab.t1))
    throw InvalidArgument("compose_kernels: k_ab.t1 must equal k_bc.t0");
  const std::size_t n = k_ab.n();
  const double h = k_ab.grid.h();
  const auto& kern = simd::active();
  Kernel out{k_ab.grid, k_ab.t0, k_bc.t1, std::vector<double>(n * n, 0.0)};
  const simd::FlushDenormals ftz;
  for (std::size_t y = 0; y < n; ++y) {
    double* row = out.entries.data() + y * n;
    for (std::size_t b = 0; b < n; ++b) {
      const double a = k_ab(y, b) * h;
      if (a != 0.0) kern.axpy(a, k_bc.entries.data() + b * n, row, n);
    }
  }
  return out;
}

Field apply_kernel(const Kernel& k, const Field& phi) {
  if (!(k.grid == phi.grid)) throw InvalidArgument("apply_kernel: field and kernel grids differ");
  const std::size_t n = k.n();
  const double h = k.grid.h();
  const auto& kern = simd::active();
  Field out{k.grid, k.t1, std::vector<double>(n, 0.0)};
  for (std::size_t y = 0; y < n; ++y) {
    const double a = phi.values[y] * h;
    if (a != 0.0) kern.axpy(a, k.entries.data() + y * n, out.values.data(), n);
  }
  return out;
}

}  // namespace paththerm
