#include "flowvmc/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "flowvmc/errors.hpp"

namespace flowvmc {

// Roots of the n-th Hermite polynomial by Newton iteration on the
// orthonormal three-term recurrence, largest root first. Standard
// construction; the asymptotic initial guesses converge in a handful of
// steps for any practical n.
GaussHermite gauss_hermite(int n) {
  if (n < 2) throw DomainError("gauss_hermite: need at least 2 nodes");

  GaussHermite q;
  q.nodes.resize(n);
  q.weights.resize(n);

  const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
  const int half = (n + 1) / 2;
  double z = 0.0;

  for (int i = 0; i < half; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) -
          1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(n, 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * q.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * q.nodes[1];
    } else {
      z = 2.0 * z - q.nodes[i - 2];
    }

    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = pim4;
      double p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }

    q.nodes[i] = z;
    q.nodes[n - 1 - i] = -z;
    q.weights[i] = 2.0 / (pp * pp);
    q.weights[n - 1 - i] = q.weights[i];
  }
  return q;
}

double gauss_hermite_expectation(const std::function<double(double)>& f,
                                 double mean, double variance, int nodes) {
  if (variance <= 0.0)
    throw DomainError("gauss_hermite_expectation: variance must be positive");
  const GaussHermite q = gauss_hermite(nodes);
  const double s = std::sqrt(2.0 * variance);
  double acc = 0.0;
  for (int i = 0; i < q.nodes.size(); ++i)
    acc += q.weights[i] * f(mean + s * q.nodes[i]);
  return acc / std::sqrt(std::numbers::pi);
}

double trapezoid(const Eigen::VectorXd& values, double dx) {
  const auto n = values.size();
  if (n < 2) return 0.0;
  return dx * (values.sum() - 0.5 * (values[0] + values[n - 1]));
}

}  // namespace flowvmc
