#pragma once

#include <array>
#include <functional>
#include <vector>

namespace flowvmc {

/**
 * Point on the 1-D Gaussian width-and-phase family
 * psi(x) ~ exp(-(a + i b) x^2 / 2), coordinatized as theta = (log a, b) so
 * that a = exp(log_a) stays positive by construction.
 */
struct TdvpState {
  double log_a = 0.0;
  double b = 0.0;
  double t = 0.0;
};

/// Right-hand side of a variational equation of motion on the family.
using TdvpRhs = std::function<std::array<double, 2>(const TdvpState&)>;

/// Projected Liouville-von Neumann flow: (2b, 1 - a^2 + b^2).
std::array<double, 2> vn_rhs(const TdvpState& state);

/// Projected Schroedinger flow: (2b, 1 - a^2/3 + b^2).
std::array<double, 2> tdse_rhs(const TdvpState& state);

/// Oscillator energy <H> = (1 + a^2 + b^2) / (4a) on the family.
double family_energy(double log_a, double b);

struct Trajectory {
  std::vector<TdvpState> states;
  /// Set when the state went non-finite mid-run; `states` then holds the
  /// finite prefix instead of the full trajectory.
  bool truncated = false;
};

/**
 * Classic fourth-order Runge-Kutta integration of `rhs` from `theta0` with
 * fixed step `dt` (the final step is shortened to land on t_end exactly).
 * A blow-up is reported through Trajectory::truncated rather than thrown,
 * so callers keep the finite prefix for inspection.
 */
Trajectory integrate(const TdvpRhs& rhs, const TdvpState& theta0,
                     double t_end, double dt);

struct EnergyTrajectory {
  Trajectory trajectory;
  /// family_energy at every recorded state, aligned with trajectory.states.
  std::vector<double> energies;
};

/**
 * Natural-gradient descent on the family energy in continuous time:
 * integrates g(theta)^{-1} (-grad L) with the analytic metric
 * g = diag(1/8, 1/(8a^2)) and L = <H>/2, which works out to
 * d log_a/dt = (1 + b^2 - a^2)/a and db/dt = -2ab.
 */
EnergyTrajectory imaginary_time_flow(const TdvpState& theta0, double t_end,
                                     double dt);

}  // namespace flowvmc
