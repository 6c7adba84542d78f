#include "flowvmc/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <vector>

#include <json.hpp>

#include "flowvmc/errors.hpp"

namespace flowvmc {

namespace {

void check_state(const GaussianState& s) {
  const int d = s.dim();
  if (d < 1) throw DomainError("gaussian state needs dimension >= 1");
  if (s.l.rows() != d || s.l.cols() != d)
    throw DomainError("cholesky factor must be dim x dim");
  for (int i = 0; i < d; ++i) {
    if (!(s.l(i, i) > 0.0))
      throw NotSpdError("cholesky factor needs a positive diagonal");
    for (int j = i + 1; j < d; ++j)
      if (s.l(i, j) != 0.0)
        throw DomainError("cholesky factor must be lower triangular");
  }
}

void check_pair(const GaussianState& s, const QuarticHamiltonian& h) {
  check_state(s);
  if (h.dim != s.dim())
    throw DomainError("state and hamiltonian dimensions differ");
}

Eigen::MatrixXd inverse_a(const GaussianState& s) {
  const Eigen::MatrixXd linv =
      s.l.triangularView<Eigen::Lower>().solve(
          Eigen::MatrixXd::Identity(s.dim(), s.dim()));
  return linv.transpose() * linv;
}

}  // namespace

GaussianState GaussianState::identity(int dim) {
  if (dim < 1) throw DomainError("gaussian state needs dimension >= 1");
  return GaussianState{Eigen::VectorXd::Zero(dim),
                       Eigen::MatrixXd::Identity(dim, dim)};
}

Eigen::VectorXd GaussianState::sample_point(RngStream& rng) const {
  const Eigen::VectorXd zeta = rng.normal_vector(dim());
  const Eigen::VectorXd y =
      l.transpose().triangularView<Eigen::Upper>().solve(zeta);
  return mu + y / std::sqrt(2.0);
}

double gaussian_energy_analytic(const GaussianState& s,
                                const QuarticHamiltonian& h) {
  check_pair(s, h);
  const Eigen::MatrixXd ainv = inverse_a(s);

  const double kinetic = 0.25 * s.l.squaredNorm();
  const double quadratic =
      h.alpha * (0.25 * h.h_xx.cwiseProduct(ainv).sum() +
                 0.5 * s.mu.dot(h.h_xx * s.mu));

  const Eigen::VectorXd v =
      ainv.diagonal() + 2.0 * s.mu.array().square().matrix();
  const double quartic =
      v.dot(h.u * v) / 32.0 +
      h.u.cwiseProduct(ainv.cwiseProduct(ainv)).sum() / 16.0 +
      s.mu.dot(h.u.cwiseProduct(ainv) * s.mu) / 4.0;
  return kinetic + quadratic + quartic;
}

EnergyEstimate gaussian_energy_mc(const GaussianState& s,
                                  const QuarticHamiltonian& h, long count,
                                  RngStream& rng) {
  check_pair(s, h);
  if (count < 1) throw DomainError("monte carlo energy needs count >= 1");
  const Eigen::MatrixXd a = s.a();
  Eigen::VectorXd values(count);
  for (long i = 0; i < count; ++i) {
    const Eigen::VectorXd x = s.sample_point(rng);
    const Eigen::VectorXd g = a * (x - s.mu);
    values[i] = 0.5 * g.squaredNorm() + potential(h, x);
  }
  EnergyEstimate e;
  e.count = count;
  e.mean = values.mean();
  if (count > 1) {
    const double var = (values.array() - e.mean).square().sum() / (count - 1);
    e.std_error = std::sqrt(var / count);
  }
  return e;
}

namespace {

// (mu, column-major lower triangle of L) as a flat vector.
Eigen::VectorXd pack(const GaussianState& s) {
  const int d = s.dim();
  Eigen::VectorXd p(d + d * (d + 1) / 2);
  p.head(d) = s.mu;
  int k = d;
  for (int j = 0; j < d; ++j)
    for (int i = j; i < d; ++i) p[k++] = s.l(i, j);
  return p;
}

GaussianState unpack(const Eigen::VectorXd& p, int d) {
  GaussianState s{p.head(d), Eigen::MatrixXd::Zero(d, d)};
  int k = d;
  for (int j = 0; j < d; ++j)
    for (int i = j; i < d; ++i) s.l(i, j) = p[k++];
  return s;
}

bool factor_feasible(const Eigen::VectorXd& p, int d) {
  int k = d;
  for (int j = 0; j < d; ++j) {
    if (p[k] <= 1e-10) return false;
    k += d - j;
  }
  return true;
}

}  // namespace

GaussianOptResult optimize_gaussian(const QuarticHamiltonian& h,
                                    const GaussianOptConfig& config) {
  if (config.iterations < 1 || config.restarts < 1)
    throw DomainError("optimizer needs iterations >= 1 and restarts >= 1");
  const int d = h.dim;
  RngStream rng(config.seed);

  const auto energy_of = [&](const Eigen::VectorXd& p) {
    return gaussian_energy_analytic(unpack(p, d), h);
  };

  double best_energy = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_params;

  for (int restart = 0; restart < config.restarts; ++restart) {
    GaussianState start = GaussianState::identity(d);
    if (restart > 0) {
      start.mu = 0.5 * rng.normal_vector(d);
      for (int j = 0; j < d; ++j) {
        start.l(j, j) = 0.5 + rng.uniform();
        for (int i = j + 1; i < d; ++i) start.l(i, j) = 0.3 * rng.normal();
      }
    }
    Eigen::VectorXd p = pack(start);
    double e = energy_of(p);
    double step = 0.25;

    for (int iter = 0; iter < config.iterations; ++iter) {
      Eigen::VectorXd grad(p.size());
      for (int i = 0; i < p.size(); ++i) {
        const double fd = 1e-6 * (1.0 + std::abs(p[i]));
        Eigen::VectorXd q = p;
        q[i] = p[i] + fd;
        const double hi = factor_feasible(q, d)
                              ? energy_of(q)
                              : std::numeric_limits<double>::infinity();
        q[i] = p[i] - fd;
        const double lo = factor_feasible(q, d)
                              ? energy_of(q)
                              : std::numeric_limits<double>::infinity();
        if (!std::isfinite(hi) || !std::isfinite(lo)) {
          grad.setZero();
          break;
        }
        grad[i] = (hi - lo) / (2.0 * fd);
      }
      const double gnorm2 = grad.squaredNorm();
      if (gnorm2 < 1e-24) break;

      double alpha = step;
      bool accepted = false;
      for (int halving = 0; halving < 40; ++halving) {
        const Eigen::VectorXd q = p - alpha * grad;
        if (factor_feasible(q, d)) {
          const double eq = energy_of(q);
          if (std::isfinite(eq) && eq <= e - 1e-4 * alpha * gnorm2) {
            p = q;
            e = eq;
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!accepted) break;
      step = std::min(2.0 * alpha, 1.0);
    }

    if (e < best_energy) {
      best_energy = e;
      best_params = p;
    }
  }

  if (!std::isfinite(best_energy))
    throw DivergedError("gaussian optimization found no finite energy");
  return GaussianOptResult{unpack(best_params, d), best_energy,
                           config.restarts, config.seed};
}

void save_gaussian_result(const GaussianOptResult& result,
                          const std::string& path) {
  const auto& s = result.state;
  std::vector<double> mu(s.mu.data(), s.mu.data() + s.mu.size());
  std::vector<double> l;
  l.reserve(s.l.size());
  for (Eigen::Index i = 0; i < s.l.rows(); ++i)
    for (Eigen::Index j = 0; j < s.l.cols(); ++j) l.push_back(s.l(i, j));
  const nlohmann::json j = {{"format_version", 1}, {"dim", s.dim()},
                            {"mu", mu},           {"l", l},
                            {"energy", result.energy},
                            {"restarts", result.restarts},
                            {"seed", result.seed}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot open gaussian file for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing gaussian file: " + path);
}

}  // namespace flowvmc
