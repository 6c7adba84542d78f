#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "flowvmc/errors.hpp"
#include "flowvmc/flow.hpp"
#include "flowvmc/hamiltonian.hpp"
#include "flowvmc/sample_batch.hpp"

namespace flowvmc {

/**
 * Training-loop knobs. Defaults follow the desk-scale setup: batches of
 * 1024, 2000 iterations, Adam on damped natural-gradient directions with a
 * cosine learning-rate decay and no warm restarts.
 */
struct OptimizerConfig {
  int batch = 1024;
  int iterations = 2000;
  double lr0 = 0.01;
  /// Damping added to the information matrix before the natural solve.
  double gamma = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool use_adam = true;
  bool use_natural_gradient = true;
  /// Decay rate of the quadratic-term schedule; 0 disables the schedule.
  double adiabatic_k = 0.0;
  /// Run the schedule backwards in time, ramping the quadratic term from
  /// 0 up to 1 so training ends on the full Hamiltonian.
  bool reverse_adiabatic = false;
  /// Starting weight of the flow-distance penalty; annealed to 0 by the
  /// last iteration on a cosine ramp.
  double penalty_weight0 = 0.0;
  /// Global-norm clip applied to the raw gradient before preconditioning.
  double grad_clip = 100.0;
  /// Estimate the information matrix on a batch drawn independently of the
  /// gradient batch instead of reusing the gradient samples.
  bool independent_fisher_batch = false;
  /// Sample count for the post-training energy estimate.
  int eval_batch = 8192;
  std::uint64_t seed = 1;
  /// Zeroes the wall-clock column so rerunning a seed reproduces the
  /// history byte for byte.
  bool determinism = false;
};

/// Throws DomainError on out-of-range settings.
void validate(const OptimizerConfig& config);

/// Cosine decay with no warm restarts: lr0 * ½(1 + cos(pi t / T)).
double cosine_lr(int t, int iterations, double lr0);

/**
 * Quadratic-term schedule (e^{-k t} - e^{-k}) / (1 - e^{-k}) at t = t_frac,
 * which starts at 1 and decays to 0. Callers wanting the opposite ramp
 * evaluate at 1 - t_frac. Requires k > 0.
 */
double adiabatic_alpha(double t_frac, double k);

/**
 * Damped natural-gradient direction: solves (I(theta) + gamma 1) dir = grad
 * with I(theta) the information matrix of the batch scores. gamma = 0 is
 * allowed only when I is nondegenerate.
 */
Eigen::VectorXd natural_step(const SampleBatch& batch,
                             const Eigen::VectorXd& grad, double gamma);

/// First/second-moment accumulators for Adam, with the step counter used
/// for bias correction.
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros(int n, double beta1 = 0.9, double beta2 = 0.999,
                         double eps = 1e-8);
};

/// One bias-corrected Adam update; returns the parameter increment
/// -lr * m_hat / (sqrt(v_hat) + eps) for the supplied direction.
Eigen::VectorXd adam_update(AdamState& state, const Eigen::VectorXd& direction,
                            double lr);

/// weight * mean over the batch of |x - z|^2, the transport cost of the
/// flow on paired base samples and outputs.
double flow_distance_penalty(const Eigen::MatrixXd& z_batch,
                             const Eigen::MatrixXd& x_batch, double weight);

struct HistoryRow {
  int iter = 0;
  double energy = 0.0;
  double std_error = 0.0;
  double alpha = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<HistoryRow> history;
  /// <H> on a fresh evaluation batch at the final parameters.
  double final_energy = 0.0;
  double final_std_error = 0.0;
  /// Deterministic quadrature value of <H> at the final parameters; only
  /// computed in one dimension, NaN otherwise.
  double quadrature_energy = 0.0;
};

/// Thrown when the divergence guard trips; carries the history up to the
/// aborted iteration.
struct TrainDiverged : DivergedError {
  explicit TrainDiverged(std::vector<HistoryRow> rows)
      : DivergedError(
            "train_flow: energy stayed above the divergence guard for 50 "
            "consecutive iterations"),
        history(std::move(rows)) {}

  std::vector<HistoryRow> history;
};

/**
 * Variational ground-state search. Each iteration draws a batch through the
 * flow, differentiates the first-derivative half-energy (plus the annealed
 * flow-distance penalty) pathwise in the parameters, optionally solves the
 * damped natural-gradient system, and applies Adam under the cosine
 * schedule. With symmetrize the trial density is the Z2-even mixture.
 *
 * The reported energies are 2 * half-energy, i.e. <H> estimates. When the
 * quadratic-term schedule is active the final evaluation uses the
 * Hamiltonian at the schedule endpoint.
 */
TrainResult train_flow(FlowModel& model, bool symmetrize,
                       const QuarticHamiltonian& h,
                       const OptimizerConfig& config);

}  // namespace flowvmc
