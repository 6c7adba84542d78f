#pragma once

#include <Eigen/Dense>

#include "flowvmc/rng.hpp"

namespace flowvmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/**
 * Lower-triangular Cholesky factor L with L L^T = m.
 *
 * Requires m symmetric (within 1e-12 relative) and positive definite;
 * throws NotSpdError otherwise.
 */
Matrix cholesky(const Matrix& m);

/**
 * Solves (m + gamma I) x = rhs for symmetric positive semidefinite m.
 *
 * gamma = 0 is allowed only when m itself is nondegenerate; throws
 * SingularError when the damped system cannot be solved to a relative
 * residual of 1e-8.
 */
Vector solve_damped(const Matrix& m, const Vector& rhs, double gamma);

/**
 * Haar-distributed random orthogonal matrix (QR of a Gaussian matrix with
 * the R diagonal sign fixed).
 */
Matrix haar_orthogonal(int d, RngStream& rng);

}  // namespace flowvmc
