#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "flowvmc/estimators.hpp"
#include "flowvmc/hamiltonian.hpp"
#include "flowvmc/rng.hpp"

namespace flowvmc {

/**
 * Gaussian trial state psi(x) ~ exp(-(x-mu)^T A (x-mu) / 2) held through the
 * Cholesky factor A = L L^T, so every representable state is automatically
 * SPD. The Born density is N(mu, A^{-1}/2).
 */
struct GaussianState {
  Eigen::VectorXd mu;
  Eigen::MatrixXd l;

  static GaussianState identity(int dim);

  int dim() const { return static_cast<int>(mu.size()); }
  Eigen::MatrixXd a() const { return l * l.transpose(); }

  /// One exact draw from the Born density: mu + L^{-T} zeta / sqrt(2).
  Eigen::VectorXd sample_point(RngStream& rng) const;
};

/// Closed-form <psi|H psi> / <psi|psi> for the quartic Hamiltonian.
double gaussian_energy_analytic(const GaussianState& s,
                                const QuarticHamiltonian& h);

/// Monte Carlo energy over exact Gaussian samples with the first-derivative
/// estimator (1/8)|grad log rho|^2 + V, grad log rho = -2A(x - mu).
EnergyEstimate gaussian_energy_mc(const GaussianState& s,
                                  const QuarticHamiltonian& h, long count,
                                  RngStream& rng);

struct GaussianOptConfig {
  int iterations = 400;
  int restarts = 5;
  std::uint64_t seed = 1;
};

struct GaussianOptResult {
  GaussianState state;
  double energy = 0.0;
  int restarts = 0;
  std::uint64_t seed = 0;
};

/**
 * Minimizes the analytic energy over (mu, L) with finite-difference
 * gradients and a backtracking line search that never leaves the SPD cone,
 * keeping the best of several restarts (identity plus random).
 */
GaussianOptResult optimize_gaussian(const QuarticHamiltonian& h,
                                    const GaussianOptConfig& config = {});

/// Writes mu, L, energy, restart count, and seed as JSON.
void save_gaussian_result(const GaussianOptResult& result,
                          const std::string& path);

}  // namespace flowvmc
