#include <cmath>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "flowvmc/errors.hpp"
#include "flowvmc/hamiltonian.hpp"
#include "flowvmc/rng.hpp"

using namespace flowvmc;

TEST_SUITE_BEGIN("hamiltonian");

TEST_CASE("potential hand values") {
  const auto h = make_quartic(1, -Eigen::MatrixXd::Ones(1, 1),
                              Eigen::MatrixXd::Ones(1, 1));
  Eigen::VectorXd x(1);
  x << 2.0;
  CHECK(potential(h, x) == doctest::Approx(0.0).epsilon(1e-15));
  x << 0.0;
  CHECK(potential(h, x) == 0.0);

  const auto osc = oscillator_hamiltonian(3);
  Eigen::VectorXd x3(3);
  x3 << 1.0, -2.0, 0.5;
  CHECK(potential(osc, x3) ==
        doctest::Approx(0.5 * x3.squaredNorm()).epsilon(1e-15));
}

TEST_CASE("quartic term matches the brute-force rank-4 contraction") {
  RngStream rng(21);
  for (int rep = 0; rep < 5; ++rep) {
    const auto h = random_hamiltonian(2, rng);
    const Eigen::VectorXd x = 2.0 * rng.normal_vector(2);
    double quartic = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          for (int l = 0; l < 2; ++l) {
            const double lam =
                3.0 * (i == j ? 1.0 : 0.0) * (k == l ? 1.0 : 0.0) * h.u(i, k);
            quartic += lam * x[i] * x[j] * x[k] * x[l];
          }
    quartic /= 24.0;
    const double manual = 0.5 * h.alpha * x.dot(h.h_xx * x) + quartic;
    CHECK(potential(h, x) == doctest::Approx(manual).epsilon(1e-12));
  }
}

TEST_CASE("random instances have spectra in the declared intervals") {
  RngStream rng(22);
  for (int dim : {1, 2, 5}) {
    const auto h = random_hamiltonian(dim, rng);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eu(h.u);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eh(-h.h_xx);
    CHECK(eu.eigenvalues().minCoeff() > 0.1 - 1e-10);
    CHECK(eu.eigenvalues().maxCoeff() < 2.0 + 1e-10);
    CHECK(eh.eigenvalues().minCoeff() > 0.1 - 1e-10);
    CHECK(eh.eigenvalues().maxCoeff() < 2.0 + 1e-10);
  }
}

TEST_CASE("random instances are reproducible from the seed") {
  const auto h1 = random_hamiltonian(3, std::uint64_t{99});
  const auto h2 = random_hamiltonian(3, std::uint64_t{99});
  CHECK((h1.h_xx - h2.h_xx).cwiseAbs().maxCoeff() == 0.0);
  CHECK((h1.u - h2.u).cwiseAbs().maxCoeff() == 0.0);
  CHECK(h1.seed == 99);

  RngStream ra(99), rb(99);
  const auto h3 = random_hamiltonian(3, ra);
  const auto h4 = random_hamiltonian(3, rb);
  CHECK((h3.u - h4.u).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ground-state parameters of the quadratic family") {
  {
    const auto g = quadratic1d_ground({1.0, 0.0, 1.0});
    CHECK(g.a == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g.b == 0.0);
  }
  {
    const auto g = quadratic1d_ground({4.0, 0.0, 1.0});
    CHECK(g.a == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(g.b == 0.0);
  }
  {
    const auto g = quadratic1d_ground({1.0, 1.0, 2.0});
    CHECK(g.a == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g.b == doctest::Approx(0.5).epsilon(1e-15));
  }
  CHECK_THROWS_AS(quadratic1d_ground({1.0, 2.0, 1.0}), DomainError);
  CHECK_THROWS_AS(quadratic1d_ground({1.0, 0.0, -1.0}), DomainError);
}

TEST_CASE("returned width minimizes the quadrature energy") {
  // For h_xp = 0, psi_a = (a/pi)^{1/4} exp(-a x^2 / 2) and
  // H psi = -1/2 h_pp psi'' + 1/2 h_xx x^2 psi with psi'' = (a^2 x^2 - a) psi.
  const auto energy = [](const Quadratic1D& q, double a) {
    const int n = 8001;
    const double lo = -12.0, hi = 12.0, dx = (hi - lo) / (n - 1);
    double e = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = lo + i * dx;
      const double psi2 =
          std::sqrt(a / M_PI) * std::exp(-a * x * x);
      const double local = -0.5 * q.h_pp * (a * a * x * x - a) +
                           0.5 * q.h_xx * x * x;
      const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
      e += w * psi2 * local;
    }
    return e * dx;
  };
  for (const Quadratic1D q : {Quadratic1D{1.0, 0.0, 1.0},
                              Quadratic1D{4.0, 0.0, 1.0}}) {
    const double a_star = quadratic1d_ground(q).a;
    const double e_star = energy(q, a_star);
    CHECK(e_star < energy(q, a_star * 0.95));
    CHECK(e_star < energy(q, a_star * 1.05));
  }
  // The oscillator optimum reproduces E0 = 1/2.
  CHECK(energy({1.0, 0.0, 1.0}, 1.0) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("adiabatic scaling acts on the quadratic term only") {
  RngStream rng(23);
  const auto h = random_hamiltonian(2, rng);
  const Eigen::VectorXd x = rng.normal_vector(2);

  const auto h0 = set_adiabatic_alpha(h, 0.0);
  const auto h1 = set_adiabatic_alpha(h, 1.0);
  const auto hh = set_adiabatic_alpha(h, 0.5);

  const Eigen::VectorXd y = x.array().square();
  CHECK(potential(h0, x) ==
        doctest::Approx(0.125 * y.dot(h.u * y)).epsilon(1e-14));
  CHECK(potential(h1, x) == potential(h, x));
  const double p = potential(h1, x) - potential(h0, x);
  CHECK(potential(hh, x) ==
        doctest::Approx(0.5 * p + potential(h0, x)).epsilon(1e-12));

  CHECK_THROWS_AS(set_adiabatic_alpha(h, -0.1), DomainError);
  CHECK_THROWS_AS(set_adiabatic_alpha(h, 1.1), DomainError);
}

TEST_CASE("potential is even and grows along rays") {
  RngStream rng(24);
  for (int dim : {1, 3}) {
    const auto h = random_hamiltonian(dim, rng);
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::VectorXd x = 3.0 * rng.normal_vector(dim);
      CHECK(potential(h, x) == potential(h, -x));
    }
    for (int rep = 0; rep < 10; ++rep) {
      Eigen::VectorXd ray = rng.normal_vector(dim);
      ray *= 1e3 / ray.norm();
      CHECK(potential(h, ray) > 0.0);
    }
  }
}

TEST_CASE("taped potential matches the plain one and its gradient") {
  RngStream rng(25);
  const auto h = random_hamiltonian(3, rng);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::VectorXd x = rng.normal_vector(3);
    ad::Tape tape;
    const std::vector<ad::Var> xs = tape.leaves(x);
    const ad::Var v = potential_taped(h, tape, xs);
    CHECK(v.value() == doctest::Approx(potential(h, x)).epsilon(1e-14));

    const Eigen::VectorXd g = tape.backward_values(v, xs);
    for (int i = 0; i < 3; ++i) {
      const double step = 1e-6 * (1.0 + std::abs(x[i]));
      Eigen::VectorXd xp = x, xm = x;
      xp[i] += step;
      xm[i] -= step;
      const double fd = (potential(h, xp) - potential(h, xm)) / (2.0 * step);
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("hamiltonian files round-trip bit for bit") {
  const auto h = random_hamiltonian(4, std::uint64_t{7});
  const auto path =
      std::filesystem::temp_directory_path() / "flowvmc_ham_test.json";
  save_hamiltonian(h, path.string());
  const auto loaded = load_hamiltonian(path.string());
  std::filesystem::remove(path);

  CHECK(loaded.dim == 4);
  CHECK(loaded.seed == 7);
  CHECK(loaded.alpha == h.alpha);
  CHECK((loaded.h_xx - h.h_xx).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.u - h.u).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("loading rejects malformed hamiltonian files") {
  const auto dir = std::filesystem::temp_directory_path();
  CHECK_THROWS_AS(load_hamiltonian((dir / "flowvmc_missing.json").string()),
                  IoError);
  const auto bad = dir / "flowvmc_bad_ham.json";
  {
    std::ofstream out(bad);
    out << "{\"format_version\": 1, \"dim\": 2, \"alpha\": 1.0, \"seed\": 0}";
  }
  CHECK_THROWS_AS(load_hamiltonian(bad.string()), MissingFieldError);
  std::filesystem::remove(bad);
}

TEST_CASE("construction validates its inputs") {
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.2, 1.0;
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(make_quartic(2, asym, id), DomainError);
  CHECK_THROWS_AS(make_quartic(2, id, asym), DomainError);
  CHECK_THROWS_AS(make_quartic(2, id, -id), NotSpdError);
  CHECK_THROWS_AS(make_quartic(2, id, id, 1.5), DomainError);
  CHECK_THROWS_AS(make_quartic(0, id, id), DomainError);
  CHECK_NOTHROW(make_quartic(2, id, Eigen::MatrixXd::Zero(2, 2)));
}

TEST_SUITE_END();
