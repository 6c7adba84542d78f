#pragma once

#include <functional>

#include <Eigen/Core>

namespace flowvmc {

/// Gauss-Hermite rule: nodes x_i and weights w_i with
/// integral f(x) exp(-x^2) dx ~ sum_i w_i f(x_i), exact for polynomials of
/// degree <= 2n-1.
struct GaussHermite {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

GaussHermite gauss_hermite(int n);

/**
 * Expectation of f under N(mean, variance) by n-node Gauss-Hermite
 * quadrature. The default 64 nodes integrates polynomials up to degree 127
 * exactly, which covers every closed-form check in this project.
 */
double gauss_hermite_expectation(const std::function<double(double)>& f,
                                 double mean, double variance, int nodes = 64);

/// Trapezoid rule over uniformly spaced samples with spacing dx.
double trapezoid(const Eigen::VectorXd& values, double dx);

}  // namespace flowvmc
