#include "flowvmc/estimators.hpp"

#include <cmath>

#include "flowvmc/errors.hpp"

namespace flowvmc {

namespace {

constexpr double kLogPi = 1.1447298858494001741;

EnergyEstimate summarize(const Eigen::VectorXd& values) {
  EnergyEstimate e;
  e.count = values.size();
  e.mean = values.mean();
  if (e.count > 1) {
    const double var =
        (values.array() - e.mean).square().sum() / (e.count - 1);
    e.std_error = std::sqrt(var / e.count);
  }
  return e;
}

}  // namespace

double DensityPsi::log_psi(const Eigen::VectorXd& x) const {
  return 0.5 * density_->value(x);
}

Eigen::VectorXd DensityPsi::grad_log_psi(const Eigen::VectorXd& x) const {
  return 0.5 * input_gradient(*density_, x);
}

double DensityPsi::laplacian_log_psi(const Eigen::VectorXd& x) const {
  const double center = log_psi(x);
  double lap = 0.0;
  Eigen::VectorXd xp = x, xm = x;
  for (int i = 0; i < x.size(); ++i) {
    const double h = 1e-4 * (1.0 + std::abs(x[i]));
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    lap += (log_psi(xp) - 2.0 * center + log_psi(xm)) / (h * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return lap;
}

WidthFamilyPsi::WidthFamilyPsi(double a) : a_(a) {
  if (a <= 0.0) throw DomainError("width parameter a must be positive");
}

double WidthFamilyPsi::log_psi(const Eigen::VectorXd& x) const {
  return 0.25 * (std::log(a_) - kLogPi) - 0.5 * a_ * x[0] * x[0];
}

Eigen::VectorXd WidthFamilyPsi::grad_log_psi(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g(1);
  g[0] = -a_ * x[0];
  return g;
}

double WidthFamilyPsi::laplacian_log_psi(const Eigen::VectorXd&) const {
  return -a_;
}

EnergyEstimate adjoint_loss(const SampleBatch& batch,
                            const QuarticHamiltonian& h) {
  if (!batch.has_input_grad())
    throw MissingFieldError("adjoint loss needs input gradients on the batch");
  Eigen::VectorXd values(batch.count());
  for (int i = 0; i < batch.count(); ++i) {
    const double g2 = batch.input_grad.row(i).squaredNorm();
    values[i] = g2 / 16.0 +
                0.5 * potential(h, batch.points.row(i).transpose());
  }
  return summarize(values);
}

double canonical_local_energy(const PsiEval& psi, const QuarticHamiltonian& h,
                              const Eigen::VectorXd& x) {
  const double lap = psi.laplacian_log_psi(x);
  const double g2 = psi.grad_log_psi(x).squaredNorm();
  // Grouped so that the potential cancels the gradient term first: at an
  // exact Gaussian ground state the two are bitwise equal and the local
  // energy comes out exactly constant.
  const double l = (potential(h, x) - 0.5 * g2) - 0.5 * lap;
  if (!std::isfinite(l))
    throw NonFiniteError("canonical local energy overflowed");
  return l;
}

void fill_local_energy(const PsiEval& psi, const QuarticHamiltonian& h,
                       SampleBatch& batch) {
  batch.local_energy.resize(batch.count());
  for (int i = 0; i < batch.count(); ++i)
    batch.local_energy[i] =
        canonical_local_energy(psi, h, batch.points.row(i).transpose());
}

EnergyEstimate energy_from_local(const SampleBatch& batch) {
  if (!batch.has_local_energy())
    throw MissingFieldError("energy estimate needs local energies");
  return summarize(batch.local_energy);
}

Eigen::VectorXd reinforce_gradient(const SampleBatch& batch, double baseline) {
  if (!batch.has_score())
    throw MissingFieldError("score-function gradient needs scores");
  if (!batch.has_local_energy())
    throw MissingFieldError("score-function gradient needs local energies");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(batch.score.cols());
  for (int i = 0; i < batch.count(); ++i)
    g += (batch.local_energy[i] - baseline) * 0.5 *
         batch.score.row(i).transpose();
  return g / batch.count();
}

double optimal_baseline(const SampleBatch& batch) {
  if (!batch.has_local_energy())
    throw MissingFieldError("baseline needs local energies");
  return batch.local_energy.mean();
}

namespace {

// Variance of a sample with the standard error of that variance estimate
// from the fourth central moment.
void variance_with_error(const Eigen::VectorXd& v, double* var,
                         double* stderr_out) {
  const long n = v.size();
  const double mean = v.mean();
  const Eigen::ArrayXd c = v.array() - mean;
  *var = c.square().sum() / (n - 1);
  const double m4 = c.pow(4).sum() / n;
  const double var_of_var = (m4 - (*var) * (*var)) / n;
  *stderr_out = std::sqrt(std::max(0.0, var_of_var));
}

}  // namespace

std::vector<VarianceRow> estimator_variance_sweep(
    const std::vector<double>& a_grid, int samples, RngStream& rng) {
  if (samples < 2) throw DomainError("variance sweep needs samples >= 2");
  const QuarticHamiltonian osc = oscillator_hamiltonian(1);
  std::vector<VarianceRow> rows;
  rows.reserve(a_grid.size());
  for (const double a : a_grid) {
    WidthFamilyLogA family(a);
    SampleBatch batch = family.sample(samples, rng);
    fill_input_grads(family, batch);

    const WidthFamilyPsi psi(a);
    Eigen::VectorXd canonical(samples), adjoint(samples);
    for (int i = 0; i < samples; ++i) {
      canonical[i] =
          0.5 * canonical_local_energy(psi, osc, batch.points.row(i).transpose());
      adjoint[i] = batch.input_grad.row(i).squaredNorm() / 16.0 +
                   0.5 * potential(osc, batch.points.row(i).transpose());
    }
    VarianceRow row;
    row.a = a;
    variance_with_error(canonical, &row.var_canonical, &row.stderr_canonical);
    variance_with_error(adjoint, &row.var_adjoint, &row.stderr_adjoint);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace flowvmc
