#pragma once

#include <cmath>
#include <span>

#include <Eigen/Core>

#include "flowvmc/ad.hpp"
#include "flowvmc/flow.hpp"
#include "flowvmc/rng.hpp"
#include "flowvmc/sample_batch.hpp"

namespace flowvmc {

/**
 * A parametrized scalar function of a point, differentiable in both the
 * parameters and the point through the tape. Log densities of the sampling
 * families all implement this, which is what the estimator and geometry
 * layers program against.
 */
class DifferentiableProgram {
 public:
  virtual ~DifferentiableProgram() = default;

  virtual int param_count() const = 0;
  virtual int input_dim() const = 0;
  virtual const Eigen::VectorXd& parameters() const = 0;
  virtual void set_parameters(const Eigen::VectorXd& theta) = 0;

  virtual double value(const Eigen::VectorXd& x) const = 0;

  /// Records the evaluation on the tape; theta and x are caller-created
  /// leaves (or expressions), so gradients flow to both.
  virtual ad::Var value_taped(ad::Tape& tape, std::span<const ad::Var> theta,
                              std::span<const ad::Var> x) const = 0;
};

/// A program that is also a normalized log density with exact sampling.
class SampleableProgram : public DifferentiableProgram {
 public:
  virtual Eigen::VectorXd sample_point(RngStream& rng) const = 0;

  /// points + log_density for count i.i.d. draws.
  SampleBatch sample(int count, RngStream& rng) const;
};

/// Gradient of the program output in its parameters at fixed x.
Eigen::VectorXd param_gradient(const DifferentiableProgram& prog,
                               const Eigen::VectorXd& x);

/// Gradient of the program output in the point at fixed parameters.
Eigen::VectorXd input_gradient(const DifferentiableProgram& prog,
                               const Eigen::VectorXd& x);

/// Fills batch.score with per-sample parameter gradients.
void fill_scores(const DifferentiableProgram& prog, SampleBatch& batch);

/// Fills batch.input_grad with per-sample point gradients.
void fill_input_grads(const DifferentiableProgram& prog, SampleBatch& batch);

/// log p_theta(x) of a flow as a differentiable program.
class FlowLogDensity : public SampleableProgram {
 public:
  explicit FlowLogDensity(FlowModel& model) : model_(&model) {}

  int param_count() const override { return model_->param_count(); }
  int input_dim() const override { return model_->dim(); }
  const Eigen::VectorXd& parameters() const override {
    return model_->parameters();
  }
  void set_parameters(const Eigen::VectorXd& theta) override {
    model_->set_parameters(theta);
  }
  double value(const Eigen::VectorXd& x) const override {
    return model_->log_prob(x);
  }
  ad::Var value_taped(ad::Tape& tape, std::span<const ad::Var> theta,
                      std::span<const ad::Var> x) const override {
    return model_->log_prob_taped(tape, theta, x);
  }
  Eigen::VectorXd sample_point(RngStream& rng) const override {
    return model_->forward(rng.normal_vector(model_->dim())).point;
  }

 private:
  FlowModel* model_;
};

/// log of the Z2-symmetrized flow density as a differentiable program.
class SymmetrizedLogDensity : public SampleableProgram {
 public:
  explicit SymmetrizedLogDensity(FlowModel& model)
      : model_(&model), sym_(model) {}

  int param_count() const override { return model_->param_count(); }
  int input_dim() const override { return model_->dim(); }
  const Eigen::VectorXd& parameters() const override {
    return model_->parameters();
  }
  void set_parameters(const Eigen::VectorXd& theta) override {
    model_->set_parameters(theta);
  }
  double value(const Eigen::VectorXd& x) const override {
    return sym_.log_prob(x);
  }
  ad::Var value_taped(ad::Tape& tape, std::span<const ad::Var> theta,
                      std::span<const ad::Var> x) const override {
    return sym_.log_prob_taped(tape, theta, x);
  }
  Eigen::VectorXd sample_point(RngStream& rng) const override;

 private:
  FlowModel* model_;
  SymmetrizedDensity sym_;
};

/// One-dimensional Gaussian with theta = (mu, log sigma).
class GaussianMeanLogSigma : public SampleableProgram {
 public:
  GaussianMeanLogSigma(double mu, double log_sigma);

  int param_count() const override { return 2; }
  int input_dim() const override { return 1; }
  const Eigen::VectorXd& parameters() const override { return theta_; }
  void set_parameters(const Eigen::VectorXd& theta) override;
  double value(const Eigen::VectorXd& x) const override;
  ad::Var value_taped(ad::Tape& tape, std::span<const ad::Var> theta,
                      std::span<const ad::Var> x) const override;
  Eigen::VectorXd sample_point(RngStream& rng) const override;

 private:
  Eigen::VectorXd theta_;
};

/// Width family N(0, 1/(2a)) with theta = (log a): the real slice of the
/// one-parameter Gaussian used by the dynamics demonstrations.
class WidthFamilyLogA : public SampleableProgram {
 public:
  explicit WidthFamilyLogA(double a);

  double a() const { return std::exp(theta_[0]); }

  int param_count() const override { return 1; }
  int input_dim() const override { return 1; }
  const Eigen::VectorXd& parameters() const override { return theta_; }
  void set_parameters(const Eigen::VectorXd& theta) override;
  double value(const Eigen::VectorXd& x) const override;
  ad::Var value_taped(ad::Tape& tape, std::span<const ad::Var> theta,
                      std::span<const ad::Var> x) const override;
  Eigen::VectorXd sample_point(RngStream& rng) const override;

 private:
  Eigen::VectorXd theta_;
};

/// Isotropic unit-variance Gaussian in d dimensions with theta = mean.
class GaussianMeanFamily : public SampleableProgram {
 public:
  explicit GaussianMeanFamily(const Eigen::VectorXd& mu) : theta_(mu) {}

  int param_count() const override { return static_cast<int>(theta_.size()); }
  int input_dim() const override { return static_cast<int>(theta_.size()); }
  const Eigen::VectorXd& parameters() const override { return theta_; }
  void set_parameters(const Eigen::VectorXd& theta) override;
  double value(const Eigen::VectorXd& x) const override;
  ad::Var value_taped(ad::Tape& tape, std::span<const ad::Var> theta,
                      std::span<const ad::Var> x) const override;
  Eigen::VectorXd sample_point(RngStream& rng) const override;

 private:
  Eigen::VectorXd theta_;
};

/**
 * The base family pushed through a fixed, parameter-independent flow map T:
 * density q(x) = p(T^{-1} x) |det J_{T^{-1}}(x)|. Scores in the family
 * parameters are unchanged pointwise, which is what makes the information
 * matrix invariant under such maps.
 */
class PushforwardProgram : public SampleableProgram {
 public:
  PushforwardProgram(SampleableProgram& base, const FlowModel& map)
      : base_(&base), map_(&map) {}

  int param_count() const override { return base_->param_count(); }
  int input_dim() const override { return base_->input_dim(); }
  const Eigen::VectorXd& parameters() const override {
    return base_->parameters();
  }
  void set_parameters(const Eigen::VectorXd& theta) override {
    base_->set_parameters(theta);
  }
  double value(const Eigen::VectorXd& x) const override;
  ad::Var value_taped(ad::Tape& tape, std::span<const ad::Var> theta,
                      std::span<const ad::Var> x) const override;
  Eigen::VectorXd sample_point(RngStream& rng) const override;

 private:
  SampleableProgram* base_;
  const FlowModel* map_;
};

/// Base family with parameters theta = M phi + c; the Jacobian of the
/// reparametrization is the constant matrix M.
class LinearReparamProgram : public SampleableProgram {
 public:
  LinearReparamProgram(SampleableProgram& base, const Eigen::MatrixXd& m,
                       const Eigen::VectorXd& c, const Eigen::VectorXd& phi0);

  int param_count() const override { return static_cast<int>(phi_.size()); }
  int input_dim() const override { return base_->input_dim(); }
  const Eigen::VectorXd& parameters() const override { return phi_; }
  void set_parameters(const Eigen::VectorXd& phi) override;
  double value(const Eigen::VectorXd& x) const override {
    return base_->value(x);
  }
  ad::Var value_taped(ad::Tape& tape, std::span<const ad::Var> theta,
                      std::span<const ad::Var> x) const override;
  Eigen::VectorXd sample_point(RngStream& rng) const override {
    return base_->sample_point(rng);
  }

 private:
  SampleableProgram* base_;
  Eigen::MatrixXd m_;
  Eigen::VectorXd c_;
  Eigen::VectorXd phi_;
};

}  // namespace flowvmc
