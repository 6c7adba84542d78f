#include "flowvmc/linalg.hpp"

#include <cmath>

#include "flowvmc/errors.hpp"

namespace flowvmc {

Matrix cholesky(const Matrix& m) {
  if (m.rows() != m.cols()) throw NotSpdError("cholesky: matrix not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw NotSpdError("cholesky: matrix not symmetric");

  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw NotSpdError("cholesky: matrix not positive definite");
  return llt.matrixL();
}

Vector solve_damped(const Matrix& m, const Vector& rhs, double gamma) {
  if (m.rows() != m.cols() || m.rows() != rhs.size())
    throw SingularError("solve_damped: dimension mismatch");
  Matrix a = m;
  a.diagonal().array() += gamma;

  Eigen::LDLT<Matrix> ldlt(a);
  Vector x = ldlt.solve(rhs);
  const double resid = (a * x - rhs).norm();
  const double bound = 1e-8 * std::max(rhs.norm(), 1e-300);
  if (ldlt.info() != Eigen::Success || !x.allFinite() || resid > bound)
    throw SingularError(
        "solve_damped: system degenerate; increase the damping");
  return x;
}

Matrix haar_orthogonal(int d, RngStream& rng) {
  Matrix g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();

  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fixing the sign of the R diagonal makes the decomposition unique and the
  // resulting Q exactly Haar-distributed.
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace flowvmc
