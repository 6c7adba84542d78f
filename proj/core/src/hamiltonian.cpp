#include "flowvmc/hamiltonian.hpp"

#include <cmath>
#include <fstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "flowvmc/errors.hpp"
#include "flowvmc/linalg.hpp"

namespace flowvmc {

namespace {

void check_symmetric(const Eigen::MatrixXd& m, const char* name) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DomainError(std::string(name) + " must be symmetric");
}

void check_psd(const Eigen::MatrixXd& m, const char* name) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-10 * scale)
    throw NotSpdError(std::string(name) +
                      " must be positive semidefinite");
}

}  // namespace

QuarticHamiltonian make_quartic(int dim, const Eigen::MatrixXd& h_xx,
                                const Eigen::MatrixXd& u, double alpha) {
  if (dim < 1) throw DomainError("hamiltonian dim must be >= 1");
  if (h_xx.rows() != dim || h_xx.cols() != dim || u.rows() != dim ||
      u.cols() != dim)
    throw DomainError("hamiltonian matrices must be dim x dim");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw DomainError("alpha must lie in [0, 1]");
  check_symmetric(h_xx, "h_xx");
  check_symmetric(u, "u");
  check_psd(u, "u");
  return QuarticHamiltonian{dim, h_xx, u, alpha, 0};
}

QuarticHamiltonian oscillator_hamiltonian(int dim) {
  return make_quartic(dim, Eigen::MatrixXd::Identity(dim, dim),
                      Eigen::MatrixXd::Zero(dim, dim), 1.0);
}

QuarticHamiltonian random_hamiltonian(int dim, RngStream& rng) {
  if (dim < 1) throw DomainError("hamiltonian dim must be >= 1");
  const auto draw = [&](double sign) {
    Eigen::VectorXd eig(dim);
    for (int i = 0; i < dim; ++i) eig[i] = 0.1 + 1.9 * rng.uniform();
    const Matrix q = haar_orthogonal(dim, rng);
    Matrix m = q * eig.asDiagonal() * q.transpose();
    m = 0.5 * (m + m.transpose().eval());
    return Matrix(sign * m);
  };
  const Matrix u = draw(1.0);
  const Matrix h_xx = draw(-1.0);
  QuarticHamiltonian h = make_quartic(dim, h_xx, u, 1.0);
  return h;
}

QuarticHamiltonian random_hamiltonian(int dim, std::uint64_t seed) {
  RngStream rng(seed);
  QuarticHamiltonian h = random_hamiltonian(dim, rng);
  h.seed = seed;
  return h;
}

QuarticHamiltonian set_adiabatic_alpha(const QuarticHamiltonian& h,
                                       double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw DomainError("alpha must lie in [0, 1]");
  QuarticHamiltonian out = h;
  out.alpha = alpha;
  return out;
}

double potential(const QuarticHamiltonian& h, const Eigen::VectorXd& x) {
  if (x.size() != h.dim) throw DomainError("point has wrong dimension");
  const Eigen::VectorXd y = x.array().square();
  return 0.5 * h.alpha * x.dot(h.h_xx * x) + 0.125 * y.dot(h.u * y);
}

ad::Var potential_taped(const QuarticHamiltonian& h, ad::Tape& tape,
                        std::span<const ad::Var> x) {
  const int d = h.dim;
  if (static_cast<int>(x.size()) != d)
    throw DomainError("point has wrong dimension");
  std::vector<ad::Var> y;
  y.reserve(d);
  for (int i = 0; i < d; ++i) y.push_back(ad::square(x[i]));

  // Row-by-row contraction keeps the summation order fixed.
  ad::Var quad = tape.leaf(0.0);
  for (int i = 0; i < d; ++i) {
    ad::Var row = h.h_xx(i, 0) * x[0];
    for (int j = 1; j < d; ++j) row = row + h.h_xx(i, j) * x[j];
    quad = quad + x[i] * row;
  }
  ad::Var quart = tape.leaf(0.0);
  for (int i = 0; i < d; ++i) {
    ad::Var row = h.u(i, 0) * y[0];
    for (int k = 1; k < d; ++k) row = row + h.u(i, k) * y[k];
    quart = quart + y[i] * row;
  }
  return 0.5 * h.alpha * quad + 0.125 * quart;
}

void save_hamiltonian(const QuarticHamiltonian& h, const std::string& path) {
  const auto flat = [](const Eigen::MatrixXd& m) {
    std::vector<double> v;
    v.reserve(m.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) v.push_back(m(i, j));
    return v;
  };
  const nlohmann::json j = {{"format_version", 1},
                            {"dim", h.dim},
                            {"h_xx", flat(h.h_xx)},
                            {"u", flat(h.u)},
                            {"alpha", h.alpha},
                            {"seed", h.seed}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot open hamiltonian file for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing hamiltonian file: " + path);
}

QuarticHamiltonian load_hamiltonian(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open hamiltonian file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed hamiltonian file " + path + ": " + e.what());
  }
  const auto require = [&](const char* key) {
    if (!j.contains(key))
      throw MissingFieldError(std::string("hamiltonian file missing field: ") +
                              key);
    return j.at(key);
  };
  if (require("format_version").get<int>() != 1)
    throw DomainError("unsupported hamiltonian format version");
  const int dim = require("dim").get<int>();
  const auto unflat = [&](const std::vector<double>& v, const char* name) {
    if (static_cast<int>(v.size()) != dim * dim)
      throw DomainError(std::string(name) + " has wrong size");
    Eigen::MatrixXd m(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j2 = 0; j2 < dim; ++j2) m(i, j2) = v[i * dim + j2];
    return m;
  };
  const auto h_xx = unflat(require("h_xx").get<std::vector<double>>(), "h_xx");
  const auto u = unflat(require("u").get<std::vector<double>>(), "u");
  QuarticHamiltonian h =
      make_quartic(dim, h_xx, u, require("alpha").get<double>());
  h.seed = require("seed").get<std::uint64_t>();
  return h;
}

GroundParams quadratic1d_ground(const Quadratic1D& q) {
  if (q.h_pp <= 0.0) throw DomainError("h_pp must be positive");
  const double disc = q.h_xx * q.h_pp - q.h_xp * q.h_xp;
  if (disc <= 0.0)
    throw DomainError("h_xx h_pp - h_xp^2 must be positive");
  return GroundParams{std::sqrt(disc) / q.h_pp, q.h_xp / q.h_pp};
}

}  // namespace flowvmc
