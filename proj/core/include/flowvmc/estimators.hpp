#pragma once

#include <vector>

#include <Eigen/Core>

#include "flowvmc/hamiltonian.hpp"
#include "flowvmc/program.hpp"
#include "flowvmc/rng.hpp"
#include "flowvmc/sample_batch.hpp"

namespace flowvmc {

struct EnergyEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long count = 0;
};

/// Trial wavefunction evaluations needed by the canonical estimator:
/// log psi with its gradient and Laplacian.
class PsiEval {
 public:
  virtual ~PsiEval() = default;
  virtual int dim() const = 0;
  virtual double log_psi(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd grad_log_psi(const Eigen::VectorXd& x) const = 0;
  virtual double laplacian_log_psi(const Eigen::VectorXd& x) const = 0;
};

/**
 * psi = sqrt of a differentiable log density. The gradient is exact through
 * the tape; the Laplacian falls back to coordinate-wise central second
 * differences of log psi with step 1e-4 (1 + |x_i|), which is adequate at
 * the dimensions this toolkit targets.
 */
class DensityPsi : public PsiEval {
 public:
  explicit DensityPsi(const DifferentiableProgram& density)
      : density_(&density) {}

  int dim() const override { return density_->input_dim(); }
  double log_psi(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd grad_log_psi(const Eigen::VectorXd& x) const override;
  double laplacian_log_psi(const Eigen::VectorXd& x) const override;

 private:
  const DifferentiableProgram* density_;
};

/// Analytic evaluations for the width family psi ~ exp(-a x^2 / 2).
class WidthFamilyPsi : public PsiEval {
 public:
  explicit WidthFamilyPsi(double a);

  int dim() const override { return 1; }
  double log_psi(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd grad_log_psi(const Eigen::VectorXd& x) const override;
  double laplacian_log_psi(const Eigen::VectorXd& x) const override;

 private:
  double a_;
};

/**
 * Adjoint estimate of the half-energy L(theta) = ½<psi|H psi>: the batch
 * mean of (1/16)|grad_x log rho|² + ½V. Needs input_grad on the batch.
 */
EnergyEstimate adjoint_loss(const SampleBatch& batch,
                            const QuarticHamiltonian& h);

/// l(x) = -½[Δ log psi + |grad log psi|²] + V(x), the canonical
/// local energy whose variance vanishes at eigenfunctions.
double canonical_local_energy(const PsiEval& psi, const QuarticHamiltonian& h,
                              const Eigen::VectorXd& x);

/// Fills batch.local_energy with canonical local energies.
void fill_local_energy(const PsiEval& psi, const QuarticHamiltonian& h,
                       SampleBatch& batch);

/// Mean and standard error of the local energies: the <H> estimate (2L).
EnergyEstimate energy_from_local(const SampleBatch& batch);

/**
 * Score-function gradient of L with a scalar baseline: the batch mean of
 * (l(x) − B) · ½ grad_theta log rho(x). Needs score and local_energy.
 */
Eigen::VectorXd reinforce_gradient(const SampleBatch& batch, double baseline);

/// The stochastic-reconfiguration baseline: the batch mean of l.
double optimal_baseline(const SampleBatch& batch);

struct VarianceRow {
  double a = 0.0;
  double var_canonical = 0.0;
  double var_adjoint = 0.0;
  double stderr_canonical = 0.0;
  double stderr_adjoint = 0.0;
};

/**
 * Monte Carlo variances of the canonical and adjoint half-energy estimators
 * on the oscillator width family across a grid of widths, with standard
 * errors of the variance estimates.
 */
std::vector<VarianceRow> estimator_variance_sweep(
    const std::vector<double>& a_grid, int samples, RngStream& rng);

}  // namespace flowvmc
