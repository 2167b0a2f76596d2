#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "paththerm/diffusion.hpp"
#include "paththerm/spacetime.hpp"

namespace paththerm {

/// Time stepping shared by the pairing normalisation and the bridge sweeps,
/// so the pairing of the built bridge is 1 to rounding.
struct BridgeOptions {
  /// Uniformly spaced snapshots on [t0, t1], end points included.
  std::size_t n_snapshots = 129;
  /// Solver steps per snapshot interval. 0 picks the smallest count with
  /// D dt / h^2 <= 1.
  std::size_t steps_per_snapshot = 0;
  /// Support threshold relative to each field's maximum.
  double floor_rel = 1e-12;
};

struct EntryExit {
  Field phi0;
  Field phihat1;
  Potential u;
  /// Pairing integral before phihat1 was divided by it.
  double pairing = 1.0;

  double t0() const noexcept { return phi0.t; }
  double t1() const noexcept { return phihat1.t; }
};

/// Computes c = sum_x phi(t1, x) phihat1(x) h with phi evolved forward from
/// phi0, and returns the pair with phihat1 / c. Throws InfeasiblePair when c
/// is zero to rounding.
EntryExit normalize_entry_exit(const Field& phi0, const Field& phihat1, const Potential& u,
                               const UnitSystem& units, const BridgeOptions& opts = {});

struct BridgeSystem {
  Grid1D grid;
  UnitSystem units;
  Potential u;
  BridgeOptions opts;
  std::vector<double> times;
  std::vector<Field> phi;
  std::vector<Field> phihat;
  std::vector<Field> mu;
  /// (hbar/m) d ln phi / dx and (hbar/m) d ln phihat / dx; NaN off support.
  std::vector<Field> a;
  std::vector<Field> ahat;
  /// R = ln(phi phihat) / 2 and S = ln(phihat / phi) / 2; NaN off support.
  std::vector<Field> R;
  std::vector<Field> S;
  std::vector<std::vector<std::complex<double>>> psi;
  /// 1 where phi and phihat both exceed floor_rel times their maximum.
  std::vector<std::vector<std::uint8_t>> support;

  std::size_t size() const noexcept { return times.size(); }
  double snapshot_dt() const noexcept { return times[1] - times[0]; }
  /// Solver options that reproduce the sweep steps over one snapshot interval.
  SolverOptions solver() const;
};

std::size_t bridge_steps_per_snapshot(const Grid1D& grid, const UnitSystem& units, double span,
                                      const BridgeOptions& opts);

/// Forward sweep of phi from phi0 and backward sweep of phihat from phihat1,
/// both on the snapshot schedule, then the derived fields.
BridgeSystem build_bridge(const EntryExit& ee, const UnitSystem& units, const BridgeOptions& opts = {});

struct TransitionPair {
  /// p(s, y; t, x) = phi(s, y) q(y, x) / phi(t, x), zero where phi(t, x) is off support.
  Kernel p;
  /// phat(s, y; t, x) = q(y, x) phihat(t, x) / phihat(s, y), zero where phihat(s, y) is off support.
  Kernel phat;
};

/// Snapshot indices i < j.
TransitionPair transition_densities(const BridgeSystem& bs, std::size_t i, std::size_t j);

/// L2 norms over interior snapshots 1 .. n-2; times[k] is the snapshot of norms[k].
struct ResidualSeries {
  std::vector<double> times;
  std::vector<double> norms;

  double max() const;
};

/// d(mu)/dt + d/dx((ahat - a) mu / 2), centred in time and space, summed over
/// cells whose 5-point neighbourhood is on support at the three snapshots.
ResidualSeries continuity_residual(const BridgeSystem& bs);

struct SchrodingerResult {
  /// V = u - 2 hbar (dS/dt + D (dS/dx)^2) per snapshot, NaN off support.
  std::vector<Field> V;
  ResidualSeries residual;
};

/// V from S, then the residual i hbar dPsi/dt + (hbar^2/2m) Psi'' - V Psi.
SchrodingerResult schrodinger_residual(const BridgeSystem& bs);

/// Grid-valued paths: positions are cell centres, one row per path.
struct BridgeEnsemble {
  Grid1D grid;
  std::vector<double> times;
  std::size_t n_paths = 0;
  std::vector<std::uint32_t> cells;

  std::uint32_t cell(std::size_t p, std::size_t k) const noexcept { return cells[p * times.size() + k]; }
  double position(std::size_t p, std::size_t k) const noexcept { return grid.x(cell(p, k)); }
  Path path(std::size_t p) const;
};

/// x(t0) ~ mu(t0, .), then steps through phat between consecutive snapshots.
BridgeEnsemble sample_bridge_paths(const BridgeSystem& bs, std::size_t n_paths, RngStream& rng);

}  // namespace paththerm
