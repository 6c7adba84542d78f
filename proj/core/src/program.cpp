#include "flowvmc/program.hpp"

#include <cmath>
#include <vector>

#include "flowvmc/errors.hpp"

namespace flowvmc {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kLogPi = 1.1447298858494001741;
}  // namespace

SampleBatch SampleableProgram::sample(int count, RngStream& rng) const {
  if (count < 1) throw DomainError("sample count must be >= 1");
  SampleBatch batch;
  batch.points.resize(count, input_dim());
  batch.log_density.resize(count);
  for (int i = 0; i < count; ++i) {
    const Eigen::VectorXd x = sample_point(rng);
    batch.points.row(i) = x;
    batch.log_density[i] = value(x);
  }
  return batch;
}

Eigen::VectorXd param_gradient(const DifferentiableProgram& prog,
                               const Eigen::VectorXd& x) {
  ad::Tape tape;
  const std::vector<ad::Var> theta = tape.leaves(prog.parameters());
  const std::vector<ad::Var> xs = tape.leaves(x);
  const ad::Var y = prog.value_taped(tape, theta, xs);
  return tape.backward_values(y, theta);
}

Eigen::VectorXd input_gradient(const DifferentiableProgram& prog,
                               const Eigen::VectorXd& x) {
  ad::Tape tape;
  const std::vector<ad::Var> theta = tape.leaves(prog.parameters());
  const std::vector<ad::Var> xs = tape.leaves(x);
  const ad::Var y = prog.value_taped(tape, theta, xs);
  return tape.backward_values(y, xs);
}

void fill_scores(const DifferentiableProgram& prog, SampleBatch& batch) {
  batch.score.resize(batch.count(), prog.param_count());
  ad::Tape tape;
  const std::vector<ad::Var> theta = tape.leaves(prog.parameters());
  const std::size_t mark = tape.size();
  for (int i = 0; i < batch.count(); ++i) {
    const std::vector<ad::Var> xs =
        tape.leaves(batch.points.row(i).transpose());
    const ad::Var y = prog.value_taped(tape, theta, xs);
    batch.score.row(i) = tape.backward_values(y, theta).transpose();
    tape.rewind(mark);
  }
}

void fill_input_grads(const DifferentiableProgram& prog, SampleBatch& batch) {
  batch.input_grad.resize(batch.count(), batch.dim());
  ad::Tape tape;
  const std::vector<ad::Var> theta = tape.leaves(prog.parameters());
  const std::size_t mark = tape.size();
  for (int i = 0; i < batch.count(); ++i) {
    const std::vector<ad::Var> xs =
        tape.leaves(batch.points.row(i).transpose());
    const ad::Var y = prog.value_taped(tape, theta, xs);
    batch.input_grad.row(i) = tape.backward_values(y, xs).transpose();
    tape.rewind(mark);
  }
}

Eigen::VectorXd SymmetrizedLogDensity::sample_point(RngStream& rng) const {
  Eigen::VectorXd x =
      model_->forward(rng.normal_vector(model_->dim())).point;
  if (rng.uniform() < 0.5) x = -x;
  return x;
}

GaussianMeanLogSigma::GaussianMeanLogSigma(double mu, double log_sigma) {
  theta_.resize(2);
  theta_ << mu, log_sigma;
}

void GaussianMeanLogSigma::set_parameters(const Eigen::VectorXd& theta) {
  if (theta.size() != 2) throw DomainError("family has two parameters");
  theta_ = theta;
}

double GaussianMeanLogSigma::value(const Eigen::VectorXd& x) const {
  const double mu = theta_[0], ls = theta_[1];
  const double z = (x[0] - mu) * std::exp(-ls);
  return -ls - 0.5 * z * z - 0.5 * kLog2Pi;
}

ad::Var GaussianMeanLogSigma::value_taped(ad::Tape& tape,
                                          std::span<const ad::Var> theta,
                                          std::span<const ad::Var> x) const {
  (void)tape;
  const ad::Var z = (x[0] - theta[0]) * ad::exp(-theta[1]);
  return -theta[1] - 0.5 * ad::square(z) - 0.5 * kLog2Pi;
}

Eigen::VectorXd GaussianMeanLogSigma::sample_point(RngStream& rng) const {
  Eigen::VectorXd x(1);
  x[0] = theta_[0] + std::exp(theta_[1]) * rng.normal();
  return x;
}

WidthFamilyLogA::WidthFamilyLogA(double a) {
  if (a <= 0.0) throw DomainError("width parameter a must be positive");
  theta_.resize(1);
  theta_[0] = std::log(a);
}

void WidthFamilyLogA::set_parameters(const Eigen::VectorXd& theta) {
  if (theta.size() != 1) throw DomainError("family has one parameter");
  theta_ = theta;
}

double WidthFamilyLogA::value(const Eigen::VectorXd& x) const {
  const double la = theta_[0];
  return 0.5 * (la - kLogPi) - std::exp(la) * x[0] * x[0];
}

ad::Var WidthFamilyLogA::value_taped(ad::Tape& tape,
                                     std::span<const ad::Var> theta,
                                     std::span<const ad::Var> x) const {
  (void)tape;
  return 0.5 * (theta[0] - kLogPi) - ad::exp(theta[0]) * ad::square(x[0]);
}

Eigen::VectorXd WidthFamilyLogA::sample_point(RngStream& rng) const {
  Eigen::VectorXd x(1);
  x[0] = rng.normal() / std::sqrt(2.0 * a());
  return x;
}

void GaussianMeanFamily::set_parameters(const Eigen::VectorXd& theta) {
  if (theta.size() != theta_.size())
    throw DomainError("parameter vector has wrong length");
  theta_ = theta;
}

double GaussianMeanFamily::value(const Eigen::VectorXd& x) const {
  return -0.5 * (x - theta_).squaredNorm() -
         0.5 * theta_.size() * kLog2Pi;
}

ad::Var GaussianMeanFamily::value_taped(ad::Tape& tape,
                                        std::span<const ad::Var> theta,
                                        std::span<const ad::Var> x) const {
  (void)tape;
  ad::Var sum = ad::square(x[0] - theta[0]);
  for (std::size_t i = 1; i < x.size(); ++i)
    sum = sum + ad::square(x[i] - theta[i]);
  return -0.5 * sum - 0.5 * static_cast<double>(theta_.size()) * kLog2Pi;
}

Eigen::VectorXd GaussianMeanFamily::sample_point(RngStream& rng) const {
  return theta_ + rng.normal_vector(static_cast<int>(theta_.size()));
}

double PushforwardProgram::value(const Eigen::VectorXd& x) const {
  const FlowModel::MapResult inv = map_->inverse(x);
  return base_->value(inv.point) + inv.logdet;
}

ad::Var PushforwardProgram::value_taped(ad::Tape& tape,
                                        std::span<const ad::Var> theta,
                                        std::span<const ad::Var> x) const {
  // The map parameters are constants here: leaves that are not in any wrt
  // set, so no gradient flows into them.
  const std::vector<ad::Var> map_theta = tape.leaves(map_->parameters());
  std::vector<ad::Var> z(x.begin(), x.end());
  ad::Var logdet = tape.leaf(0.0);
  map_->apply<ad::Var>({map_theta.data(), map_theta.size()}, z, logdet,
                       /*forward=*/false);
  return base_->value_taped(tape, theta, {z.data(), z.size()}) + logdet;
}

Eigen::VectorXd PushforwardProgram::sample_point(RngStream& rng) const {
  return map_->forward(base_->sample_point(rng)).point;
}

LinearReparamProgram::LinearReparamProgram(SampleableProgram& base,
                                           const Eigen::MatrixXd& m,
                                           const Eigen::VectorXd& c,
                                           const Eigen::VectorXd& phi0)
    : base_(&base), m_(m), c_(c) {
  if (m_.rows() != base.param_count() || m_.rows() != c_.size() ||
      m_.cols() != phi0.size())
    throw DomainError("reparametrization shapes do not match");
  set_parameters(phi0);
}

void LinearReparamProgram::set_parameters(const Eigen::VectorXd& phi) {
  if (phi.size() != m_.cols())
    throw DomainError("parameter vector has wrong length");
  phi_ = phi;
  base_->set_parameters(m_ * phi_ + c_);
}

ad::Var LinearReparamProgram::value_taped(ad::Tape& tape,
                                          std::span<const ad::Var> theta,
                                          std::span<const ad::Var> x) const {
  std::vector<ad::Var> base_theta;
  base_theta.reserve(m_.rows());
  for (Eigen::Index j = 0; j < m_.rows(); ++j) {
    ad::Var acc = m_(j, 0) * theta[0];
    for (Eigen::Index k = 1; k < m_.cols(); ++k)
      acc = acc + m_(j, k) * theta[k];
    base_theta.push_back(acc + c_[j]);
  }
  return base_->value_taped(tape, {base_theta.data(), base_theta.size()}, x);
}

}  // namespace flowvmc
