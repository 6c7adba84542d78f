#pragma once

#include <Eigen/Core>

namespace flowvmc {

/**
 * Batch of i.i.d. samples with whatever per-sample quantities have been
 * filled in so far. points and log_density are always present; the other
 * fields start empty and are populated by the estimator and geometry layers.
 */
struct SampleBatch {
  Eigen::MatrixXd points;        // count x dim
  Eigen::VectorXd log_density;   // count
  Eigen::MatrixXd input_grad;    // count x dim, gradient of log density in x
  Eigen::MatrixXd score;         // count x n_params, gradient in parameters
  Eigen::VectorXd local_energy;  // count

  int count() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }

  bool has_input_grad() const { return input_grad.rows() == points.rows(); }
  bool has_score() const { return score.rows() == points.rows(); }
  bool has_local_energy() const {
    return local_energy.size() == points.rows();
  }
};

}  // namespace flowvmc
