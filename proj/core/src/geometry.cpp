#include "flowvmc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flowvmc/errors.hpp"
#include "flowvmc/quadrature.hpp"

namespace flowvmc {

namespace {

Eigen::MatrixXd centered_scores(const SampleBatch& batch) {
  if (!batch.has_score())
    throw MissingFieldError("information matrix needs scores on the batch");
  const Eigen::RowVectorXd mean = batch.score.colwise().mean();
  return batch.score.rowwise() - mean;
}

void check_density(const Eigen::VectorXd& p, double dx, const char* name) {
  if (p.minCoeff() < 0.0)
    throw DomainError(std::string(name) + " must be nonnegative");
  if (std::abs(trapezoid(p, dx) - 1.0) > 1e-4)
    throw DomainError(std::string(name) +
                      " is not normalized on the grid within 1e-4");
}

}  // namespace

InfoMatrix fisher_matrix(const SampleBatch& batch) {
  const Eigen::MatrixXd c = centered_scores(batch);
  Eigen::MatrixXd m = c.transpose() * c / batch.count();
  m = 0.5 * (m + m.transpose().eval());
  return InfoMatrix{m, batch.count()};
}

InfoMatrixWithError fisher_with_stderr(const SampleBatch& batch) {
  const Eigen::MatrixXd c = centered_scores(batch);
  const long n = batch.count();
  const int dim = static_cast<int>(c.cols());
  InfoMatrixWithError out;
  out.count = n;
  out.m = c.transpose() * c / n;
  out.m = (0.5 * (out.m + out.m.transpose().eval())).eval();
  out.std_error = Eigen::MatrixXd::Zero(dim, dim);
  if (n < 2) return out;
  for (int j = 0; j < dim; ++j) {
    for (int k = j; k < dim; ++k) {
      const Eigen::ArrayXd prod = c.col(j).array() * c.col(k).array();
      const double var = (prod - out.m(j, k)).square().sum() / (n - 1);
      const double se = std::sqrt(var / n);
      out.std_error(j, k) = se;
      out.std_error(k, j) = se;
    }
  }
  return out;
}

InfoMatrix quantum_metric_real(const SampleBatch& batch) {
  InfoMatrix g = fisher_matrix(batch);
  g.m /= 4.0;
  return g;
}

double fisher_rao_distance_1d(const Eigen::VectorXd& p,
                              const Eigen::VectorXd& q, double dx) {
  if (p.size() != q.size())
    throw DomainError("densities must share the grid");
  if (!(dx > 0.0)) throw DomainError("grid spacing must be positive");
  check_density(p, dx, "first density");
  check_density(q, dx, "second density");
  const Eigen::VectorXd root = (p.array() * q.array()).sqrt();
  const double bc = std::clamp(trapezoid(root, dx), -1.0, 1.0);
  return std::acos(bc);
}

double fubini_study_distance_1d(const Eigen::VectorXd& psi,
                                const Eigen::VectorXd& phi, double dx) {
  if (psi.size() != phi.size())
    throw DomainError("wavefunctions must share the grid");
  if (!(dx > 0.0)) throw DomainError("grid spacing must be positive");
  const Eigen::VectorXd p2 = psi.array().square();
  const Eigen::VectorXd f2 = phi.array().square();
  if (std::abs(trapezoid(p2, dx) - 1.0) > 1e-4 ||
      std::abs(trapezoid(f2, dx) - 1.0) > 1e-4)
    throw DomainError("wavefunctions must be unit-normalized on the grid");
  const Eigen::VectorXd prod = psi.array() * phi.array();
  const double overlap =
      std::clamp(std::abs(trapezoid(prod, dx)), 0.0, 1.0);
  return std::acos(overlap);
}

ReparamReport reparam_covariance_check(SampleableProgram& base,
                                       const Eigen::MatrixXd& m,
                                       const Eigen::VectorXd& c,
                                       const Eigen::VectorXd& phi0, int count,
                                       RngStream& rng) {
  if (count < 2) throw DomainError("congruence check needs count >= 2");
  LinearReparamProgram reparam(base, m, c, phi0);
  SampleBatch rb = reparam.sample(count, rng);
  fill_scores(reparam, rb);
  const InfoMatrix tilde = fisher_matrix(rb);

  base.set_parameters(m * phi0 + c);
  SampleBatch bb = base.sample(count, rng);
  fill_scores(base, bb);
  const InfoMatrix direct = fisher_matrix(bb);

  ReparamReport report;
  report.reparam_fisher = tilde.m;
  report.congruent_fisher = m.transpose() * direct.m * m;
  const double scale =
      std::max(report.congruent_fisher.cwiseAbs().maxCoeff(), 1e-12);
  report.max_rel_deviation =
      (report.reparam_fisher - report.congruent_fisher).cwiseAbs().maxCoeff() /
      scale;
  report.count = count;
  return report;
}

}  // namespace flowvmc
