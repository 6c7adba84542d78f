#include "flowvmc/tdvp.hpp"

#include <cmath>

#include "flowvmc/errors.hpp"

namespace flowvmc {

std::array<double, 2> vn_rhs(const TdvpState& state) {
  const double a = std::exp(state.log_a);
  return {2.0 * state.b, 1.0 - a * a + state.b * state.b};
}

std::array<double, 2> tdse_rhs(const TdvpState& state) {
  const double a = std::exp(state.log_a);
  return {2.0 * state.b, 1.0 - a * a / 3.0 + state.b * state.b};
}

double family_energy(double log_a, double b) {
  const double a = std::exp(log_a);
  return (1.0 + a * a + b * b) / (4.0 * a);
}

namespace {

bool finite_state(const TdvpState& s) {
  return std::isfinite(s.log_a) && std::isfinite(s.b);
}

TdvpState advance(const TdvpState& s, double h, const std::array<double, 2>& k) {
  return {s.log_a + h * k[0], s.b + h * k[1], s.t + h};
}

/// One classic RK4 step of size h.
TdvpState rk4_step(const TdvpRhs& rhs, const TdvpState& s, double h) {
  const auto k1 = rhs(s);
  const auto k2 = rhs(advance(s, 0.5 * h, k1));
  const auto k3 = rhs(advance(s, 0.5 * h, k2));
  const auto k4 = rhs(advance(s, h, k3));
  TdvpState next = s;
  next.log_a += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
  next.b += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
  next.t += h;
  return next;
}

}  // namespace

Trajectory integrate(const TdvpRhs& rhs, const TdvpState& theta0, double t_end,
                     double dt) {
  if (!(dt > 0.0)) {
    throw DomainError("integrate: dt must be positive");
  }
  if (!(t_end >= 0.0)) {
    throw DomainError("integrate: t_end must be non-negative");
  }
  if (!finite_state(theta0)) {
    throw DomainError("integrate: initial state must be finite");
  }

  Trajectory out;
  TdvpState s = theta0;
  out.states.push_back(s);
  double remaining = t_end;
  while (remaining > 0.0) {
    const double h = remaining < dt ? remaining : dt;
    const TdvpState next = rk4_step(rhs, s, h);
    if (!finite_state(next)) {
      out.truncated = true;
      return out;
    }
    s = next;
    out.states.push_back(s);
    remaining -= h;
  }
  return out;
}

EnergyTrajectory imaginary_time_flow(const TdvpState& theta0, double t_end,
                                     double dt) {
  // Riemannian gradient flow of L = <H>/2 = (1 + a^2 + b^2)/(8a) under
  // g = diag(1/8, 1/(8a^2)):
  //   dL/dlog_a = (a^2 - 1 - b^2)/(8a),  dL/db = b/(4a),
  // so -g^{-1} grad L = ((1 + b^2 - a^2)/a, -2ab).
  const TdvpRhs rhs = [](const TdvpState& s) -> std::array<double, 2> {
    const double a = std::exp(s.log_a);
    return {(1.0 + s.b * s.b - a * a) / a, -2.0 * a * s.b};
  };
  EnergyTrajectory out;
  out.trajectory = integrate(rhs, theta0, t_end, dt);
  out.energies.reserve(out.trajectory.states.size());
  for (const TdvpState& s : out.trajectory.states) {
    out.energies.push_back(family_energy(s.log_a, s.b));
  }
  return out;
}

}  // namespace flowvmc
