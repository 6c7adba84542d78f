#pragma once

#include <Eigen/Core>

#include "flowvmc/program.hpp"
#include "flowvmc/rng.hpp"
#include "flowvmc/sample_batch.hpp"

namespace flowvmc {

/// Empirical information matrix together with the sample count behind it.
struct InfoMatrix {
  Eigen::MatrixXd m;
  long count = 0;
};

/// Information matrix with a per-entry Monte Carlo standard error.
struct InfoMatrixWithError {
  Eigen::MatrixXd m;
  Eigen::MatrixXd std_error;
  long count = 0;
};

/**
 * Centered covariance of the scores: mean of s s^T minus the outer product
 * of the score mean, symmetrized. The population score mean is zero, but
 * centering removes the leading finite-sample bias of the estimate.
 */
InfoMatrix fisher_matrix(const SampleBatch& batch);

/// Same estimate with the standard error of every matrix entry.
InfoMatrixWithError fisher_with_stderr(const SampleBatch& batch);

/// Metric on the wavefunction family associated with the sampled densities:
/// exactly one quarter of the information matrix (real positive psi).
InfoMatrix quantum_metric_real(const SampleBatch& batch);

/**
 * arccos of the Bhattacharyya coefficient of two densities sampled on a
 * uniform grid with spacing dx, by trapezoid quadrature. Both densities
 * must be nonnegative and normalized on the grid within 1e-4; the overlap
 * is clipped to [-1, 1] before the arccos.
 */
double fisher_rao_distance_1d(const Eigen::VectorXd& p,
                              const Eigen::VectorXd& q, double dx);

/// arccos |<psi|phi>| for two real wavefunctions sampled on a uniform grid
/// with spacing dx; both must be unit-normalized within 1e-4.
double fubini_study_distance_1d(const Eigen::VectorXd& psi,
                                const Eigen::VectorXd& phi, double dx);

/// Outcome of the congruence check for theta = M phi + c: the information
/// matrix estimated in the phi parameters against M^T I(theta) M from an
/// independent batch of the base family.
struct ReparamReport {
  Eigen::MatrixXd reparam_fisher;
  Eigen::MatrixXd congruent_fisher;
  double max_rel_deviation = 0.0;
  long count = 0;
};

ReparamReport reparam_covariance_check(SampleableProgram& base,
                                       const Eigen::MatrixXd& m,
                                       const Eigen::VectorXd& c,
                                       const Eigen::VectorXd& phi0, int count,
                                       RngStream& rng);

}  // namespace flowvmc
