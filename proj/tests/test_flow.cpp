#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include <doctest.h>

#include <Eigen/LU>

#include "flowvmc/errors.hpp"
#include "flowvmc/flow.hpp"
#include "flowvmc/rng.hpp"

using namespace flowvmc;

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double base_log(const Eigen::VectorXd& z) {
  return -0.5 * z.squaredNorm() - 0.5 * z.size() * kLog2Pi;
}

// Small random perturbation of every parameter, leaving the map bijective
// (scales stay bounded through tanh) but far from the identity.
void randomize(FlowModel& model, RngStream& rng, double spread = 0.2) {
  model.initialize(rng);
  Eigen::VectorXd theta = model.parameters();
  for (int i = 0; i < theta.size(); ++i) theta[i] += spread * rng.normal();
  model.set_parameters(theta);
}

FlowModel make_model(int dim, int layers, int width = 8, int depth = 1) {
  FlowConfig c;
  c.dim = dim;
  c.couplings = layers;
  c.affine_layers = layers;
  c.hidden_width = width;
  c.hidden_depth = depth;
  return FlowModel(c);
}

}  // namespace

TEST_SUITE_BEGIN("flow");

TEST_CASE("fresh models are the identity map") {
  RngStream rng(3);
  for (int dim : {1, 2, 5}) {
    FlowModel model = make_model(dim, 4);
    model.initialize(rng);
    for (int rep = 0; rep < 10; ++rep) {
      const Eigen::VectorXd z = rng.normal_vector(dim);
      const auto fwd = model.forward(z);
      CHECK((fwd.point - z).cwiseAbs().maxCoeff() == 0.0);
      CHECK(fwd.logdet == 0.0);
    }
  }
}

TEST_CASE("affine layer scaling one coordinate has that log-scale as logdet") {
  FlowModel model(3, {affine_layer()});
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(6);
  theta[2] = 0.7;  // log-scale of coordinate 2
  model.set_parameters(theta);
  Eigen::VectorXd z(3);
  z << 1.0, -2.0, 3.0;
  const auto fwd = model.forward(z);
  CHECK(fwd.point[0] == 1.0);
  CHECK(fwd.point[1] == -2.0);
  CHECK(fwd.point[2] == doctest::Approx(3.0 * std::exp(0.7)).epsilon(1e-14));
  CHECK(fwd.logdet == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("logdet matches the finite-difference Jacobian determinant") {
  RngStream rng(17);
  for (int dim : {2, 3, 5}) {
    FlowModel model = make_model(dim, 2);
    randomize(model, rng, 0.3);
    const Eigen::VectorXd z = rng.normal_vector(dim);
    const auto fwd = model.forward(z);

    const double h = 1e-6;
    Eigen::MatrixXd jac(dim, dim);
    for (int j = 0; j < dim; ++j) {
      Eigen::VectorXd zp = z, zm = z;
      zp[j] += h;
      zm[j] -= h;
      jac.col(j) = (model.forward(zp).point - model.forward(zm).point) /
                   (2.0 * h);
    }
    const double fd_logdet = std::log(std::abs(jac.determinant()));
    CHECK(fwd.logdet == doctest::Approx(fd_logdet).epsilon(1e-4));
  }
}

TEST_CASE("round-trip inversion across the architecture matrix") {
  RngStream rng(29);
  for (int dim : {1, 2, 5, 10}) {
    for (int layers : {2, 4, 8}) {
      FlowModel model = make_model(dim, layers);
      randomize(model, rng);
      double max_err = 0.0, max_ld = 0.0;
      for (int i = 0; i < 1000; ++i) {
        const Eigen::VectorXd x = 2.0 * rng.normal_vector(dim);
        const auto inv = model.inverse(x);
        const auto fwd = model.forward(inv.point);
        max_err = std::max(max_err,
                           (fwd.point - x).cwiseAbs().maxCoeff());
        max_ld = std::max(max_ld, std::abs(fwd.logdet + inv.logdet));
      }
      CAPTURE(dim);
      CAPTURE(layers);
      CHECK(max_err < 1e-8);
      CHECK(max_ld < 1e-8);
    }
  }
}

TEST_CASE("identity log density is the standard normal") {
  FlowModel model = make_model(1, 1);
  Eigen::VectorXd x(1);
  x << 0.0;
  CHECK(model.log_prob(x) ==
        doctest::Approx(-0.5 * kLog2Pi).epsilon(1e-15));
  CHECK(model.log_psi(x) ==
        doctest::Approx(-0.25 * kLog2Pi).epsilon(1e-15));
}

TEST_CASE("density normalizes to one by quadrature") {
  RngStream rng(41);

  SUBCASE("one dimension") {
    FlowModel model = make_model(1, 2);
    randomize(model, rng);
    const int n = 4001;
    const double lo = -10.0, hi = 10.0, dx = (hi - lo) / (n - 1);
    double mass = 0.0;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd x(1);
      x << lo + i * dx;
      const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
      mass += w * std::exp(model.log_prob(x));
    }
    mass *= dx;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  }

  SUBCASE("two dimensions") {
    FlowModel model = make_model(2, 2, 4);
    randomize(model, rng);
    const int n = 401;
    const double lo = -10.0, hi = 10.0, dx = (hi - lo) / (n - 1);
    double mass = 0.0;
    Eigen::VectorXd x(2);
    for (int i = 0; i < n; ++i) {
      const double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
      x[0] = lo + i * dx;
      for (int j = 0; j < n; ++j) {
        const double wj = (j == 0 || j == n - 1) ? 0.5 : 1.0;
        x[1] = lo + j * dx;
        mass += wi * wj * std::exp(model.log_prob(x));
      }
    }
    mass *= dx * dx;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("identity flow samples standard-normal moments") {
  FlowModel model = make_model(1, 1);
  RngStream rng(55);
  const int n = 100000;
  const SampleBatch batch = model.sample(n, rng);
  const double mean = batch.points.col(0).mean();
  const double var =
      (batch.points.col(0).array() - mean).square().sum() / (n - 1);
  const double se_mean = std::sqrt(var / n);
  const double se_var = var * std::sqrt(2.0 / (n - 1));
  CHECK(std::abs(mean) < 4.0 * se_mean);
  CHECK(std::abs(var - 1.0) < 4.0 * se_var);
}

TEST_CASE("shifted flow samples around the shift") {
  FlowModel model(2, {affine_layer()});
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(4);
  theta[2] = 0.5;
  theta[3] = -1.2;
  model.set_parameters(theta);
  RngStream rng(56);
  const int n = 100000;
  const SampleBatch batch = model.sample(n, rng);
  for (int j = 0; j < 2; ++j) {
    const double mean = batch.points.col(j).mean();
    const double var =
        (batch.points.col(j).array() - mean).square().sum() / (n - 1);
    CHECK(std::abs(mean - theta[2 + j]) < 4.0 * std::sqrt(var / n));
  }
}

TEST_CASE("sampled log densities equal recomputed ones") {
  RngStream rng(57);
  FlowModel model = make_model(3, 2);
  randomize(model, rng);
  const SampleBatch batch = model.sample(500, rng);
  for (int i = 0; i < batch.count(); ++i) {
    CHECK(batch.log_density[i] ==
          model.log_prob(batch.points.row(i).transpose()));
  }
}

TEST_CASE("importance identity integrates a compact function") {
  RngStream rng(58);
  FlowModel model = make_model(1, 2);
  randomize(model, rng);
  const int n = 100000;
  const SampleBatch batch = model.sample(n, rng);
  // E_p[1_{|x|<=1} cos(x) / p(x)] = integral of cos over [-1, 1].
  Eigen::VectorXd vals(n);
  for (int i = 0; i < n; ++i) {
    const double x = batch.points(i, 0);
    vals[i] = std::abs(x) <= 1.0
                  ? std::cos(x) * std::exp(-batch.log_density[i])
                  : 0.0;
  }
  const double mean = vals.mean();
  const double var = (vals.array() - mean).square().sum() / (n - 1);
  const double target = 2.0 * std::sin(1.0);
  CHECK(std::abs(mean - target) < 4.0 * std::sqrt(var / n));
}

TEST_CASE("symmetrized density is exactly even") {
  RngStream rng(60);
  FlowModel model = make_model(2, 3);
  randomize(model, rng, 0.4);
  const SymmetrizedDensity sym(model);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::VectorXd x = 2.0 * rng.normal_vector(2);
    CHECK(sym.log_prob(x) == sym.log_prob(-x));
  }
}

TEST_CASE("symmetrizing an even density changes nothing") {
  FlowModel model = make_model(2, 2);  // identity map, even base
  const SymmetrizedDensity sym(model);
  RngStream rng(61);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::VectorXd x = rng.normal_vector(2);
    CHECK(sym.log_prob(x) ==
          doctest::Approx(model.log_prob(x)).epsilon(1e-12));
  }
}

TEST_CASE("symmetrized density normalizes to one") {
  RngStream rng(62);
  FlowModel model = make_model(1, 2);
  randomize(model, rng, 0.4);
  const SymmetrizedDensity sym(model);
  const int n = 4001;
  const double lo = -10.0, hi = 10.0, dx = (hi - lo) / (n - 1);
  double mass = 0.0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x(1);
    x << lo + i * dx;
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    mass += w * std::exp(sym.log_prob(x));
  }
  mass *= dx;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("symmetrized sampling statistics") {
  // A clearly asymmetric flow: standard normal shifted by 1.
  FlowModel model(1, {affine_layer()});
  Eigen::VectorXd theta(2);
  theta << 0.0, 1.0;
  model.set_parameters(theta);
  const SymmetrizedDensity sym(model);
  RngStream rng(63);
  const int n = 100000;
  const SampleBatch sb = sym.sample(n, rng);

  // Odd statistic: the mean must vanish.
  const double mean = sb.points.col(0).mean();
  const double var =
      (sb.points.col(0).array() - mean).square().sum() / (n - 1);
  CHECK(std::abs(mean) < 4.0 * std::sqrt(var / n));

  // Even statistic: second moment matches the unsymmetrized flow.
  RngStream rng2(64);
  const SampleBatch ub = model.sample(n, rng2);
  const double m2_sym = sb.points.col(0).array().square().mean();
  const double m2_un = ub.points.col(0).array().square().mean();
  const double v_sym =
      (sb.points.col(0).array().square() - m2_sym).square().sum() / (n - 1);
  const double v_un =
      (ub.points.col(0).array().square() - m2_un).square().sum() / (n - 1);
  const double se = std::sqrt((v_sym + v_un) / n);
  CHECK(std::abs(m2_sym - m2_un) < 4.0 * se);

  // Histogram symmetric under reflection: chi-squared over mirrored bins.
  const int half_bins = 10;
  const double width = 0.5;
  std::vector<double> pos(half_bins, 0.0), neg(half_bins, 0.0);
  for (int i = 0; i < n; ++i) {
    const double x = sb.points(i, 0);
    const int b = static_cast<int>(std::abs(x) / width);
    if (b < half_bins) (x >= 0 ? pos : neg)[b] += 1.0;
  }
  double chi2 = 0.0;
  int dof = 0;
  for (int b = 0; b < half_bins; ++b) {
    const double tot = pos[b] + neg[b];
    if (tot < 20.0) continue;
    chi2 += (pos[b] - neg[b]) * (pos[b] - neg[b]) / tot;
    ++dof;
  }
  CHECK(dof >= 5);
  CHECK(chi2 < dof + 5.0 * std::sqrt(2.0 * dof));

  // The batch carries the symmetrized density.
  for (int i = 0; i < 50; ++i) {
    CHECK(sb.log_density[i] ==
          sym.log_prob(sb.points.row(i).transpose()));
  }
}

TEST_CASE("log psi is half the log density") {
  RngStream rng(65);
  FlowModel model = make_model(2, 2);
  randomize(model, rng);
  const SymmetrizedDensity sym(model);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::VectorXd x = rng.normal_vector(2);
    CHECK(std::exp(2.0 * model.log_psi(x)) ==
          doctest::Approx(std::exp(model.log_prob(x))).epsilon(1e-15));
    CHECK(sym.log_psi(x) == 0.5 * sym.log_prob(x));
  }
}

TEST_CASE("stacked layers compose") {
  RngStream rng(66);
  for (bool use_coupling : {false, true}) {
    const int dim = use_coupling ? 3 : 2;
    std::vector<LayerSpec> specs;
    if (use_coupling) {
      specs = {coupling_layer(dim, 0, 4, 1), coupling_layer(dim, 1, 4, 1)};
    } else {
      specs = {affine_layer(), affine_layer()};
    }
    FlowModel both(dim, specs);
    randomize(both, rng, 0.3);
    FlowModel first(dim, {specs[0]});
    FlowModel second(dim, {specs[1]});
    const int n1 = specs[0].param_count(dim);
    first.set_parameters(both.parameters().head(n1));
    second.set_parameters(both.parameters().tail(
        specs[1].param_count(dim)));

    for (int rep = 0; rep < 30; ++rep) {
      const Eigen::VectorXd x = 2.0 * rng.normal_vector(dim);
      const auto z2 = second.inverse(x);
      const auto z1 = first.inverse(z2.point);
      const double manual = base_log(z1.point) + z1.logdet + z2.logdet;
      CHECK(both.log_prob(x) == doctest::Approx(manual).epsilon(1e-12));
    }
  }
}

TEST_CASE("taped evaluation reproduces the double path") {
  RngStream rng(67);
  FlowModel model = make_model(5, 3);
  randomize(model, rng);
  const SymmetrizedDensity sym(model);
  ad::Tape tape;
  const std::vector<ad::Var> theta = tape.leaves(model.parameters());
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::VectorXd zv = rng.normal_vector(5);
    const std::vector<ad::Var> z = tape.leaves(zv);

    ad::Var logdet;
    const std::vector<ad::Var> x = model.forward_taped(tape, theta, z, &logdet);
    const auto fwd = model.forward(zv);
    for (int i = 0; i < 5; ++i) CHECK(x[i].value() == fwd.point[i]);
    CHECK(logdet.value() == fwd.logdet);

    const std::vector<ad::Var> xs = tape.leaves(fwd.point);
    CHECK(model.log_prob_taped(tape, theta, xs).value() ==
          model.log_prob(fwd.point));
    CHECK(sym.log_prob_taped(tape, theta, xs).value() ==
          sym.log_prob(fwd.point));
  }
}

TEST_CASE("checkpoints round-trip exactly") {
  RngStream rng(68);
  FlowModel model = make_model(5, 3, 8, 2);
  randomize(model, rng);
  const auto path =
      std::filesystem::temp_directory_path() / "flowvmc_ckpt_test.json";
  save_flow(model, true, path.string());
  const LoadedFlow loaded = load_flow(path.string());
  std::filesystem::remove(path);

  CHECK(loaded.symmetrized);
  CHECK(loaded.model.dim() == 5);
  REQUIRE(loaded.model.param_count() == model.param_count());
  for (int i = 0; i < model.param_count(); ++i)
    CHECK(loaded.model.parameters()[i] == model.parameters()[i]);
  const Eigen::VectorXd x = rng.normal_vector(5);
  CHECK(loaded.model.log_prob(x) == model.log_prob(x));
}

TEST_CASE("loading rejects broken checkpoints") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto missing = dir / "flowvmc_no_such_file.json";
  CHECK_THROWS_AS(load_flow(missing.string()), IoError);

  const auto bad = dir / "flowvmc_bad_ckpt.json";
  {
    std::ofstream out(bad);
    out << "{\"format_version\": 1, \"dim\": 2}";
  }
  CHECK_THROWS_AS(load_flow(bad.string()), MissingFieldError);
  std::filesystem::remove(bad);
}

TEST_CASE("constructor and parameter validation") {
  CHECK_THROWS_AS(FlowModel(0, {affine_layer()}), DomainError);
  CHECK_THROWS_AS(FlowModel(1, {coupling_layer(2, 0, 4, 1)}), DomainError);
  CHECK_THROWS_AS(coupling_layer(1, 0, 4, 1), DomainError);
  FlowModel model = make_model(2, 2);
  CHECK_THROWS_AS(model.set_parameters(Eigen::VectorXd::Zero(3)), DomainError);
  RngStream rng(1);
  CHECK_THROWS_AS(model.sample(0, rng), DomainError);
}

TEST_SUITE_END();
