#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include <Eigen/Core>

#include "flowvmc/errors.hpp"
#include "flowvmc/flow.hpp"
#include "flowvmc/hamiltonian.hpp"
#include "flowvmc/optimize.hpp"
#include "flowvmc/program.hpp"
#include "flowvmc/rng.hpp"

using namespace flowvmc;

TEST_SUITE_BEGIN("optimize");

namespace {

FlowModel affine_flow_1d(std::uint64_t init_seed) {
  FlowConfig fc;
  fc.dim = 1;
  fc.couplings = 0;
  fc.affine_layers = 1;
  FlowModel model(fc);
  RngStream init(init_seed);
  model.initialize(init);
  return model;
}

double median_of(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("cosine schedule hits its endpoints exactly") {
  CHECK(cosine_lr(0, 200, 0.01) == 0.01);
  CHECK(cosine_lr(200, 200, 0.01) == 0.0);
  CHECK(cosine_lr(100, 200, 0.01) == doctest::Approx(0.005).epsilon(1e-14));
  CHECK(cosine_lr(50, 200, 0.01) ==
        doctest::Approx(0.01 * 0.5 * (1.0 + std::cos(std::numbers::pi / 4)))
            .epsilon(1e-14));
  CHECK_THROWS_AS(cosine_lr(-1, 200, 0.01), DomainError);
  CHECK_THROWS_AS(cosine_lr(201, 200, 0.01), DomainError);
  CHECK_THROWS_AS(cosine_lr(0, 0, 0.01), DomainError);
}

TEST_CASE("quadratic-term schedule endpoints and midpoint") {
  for (double k : {0.5, 1.0, 3.0, 10.0}) {
    CHECK(adiabatic_alpha(0.0, k) == 1.0);
    CHECK(adiabatic_alpha(1.0, k) == 0.0);
  }
  const double expected =
      (std::exp(-0.5) - std::exp(-1.0)) / (1.0 - std::exp(-1.0));
  CHECK(adiabatic_alpha(0.5, 1.0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(adiabatic_alpha(0.5, 1.0) == doctest::Approx(0.3775).epsilon(1e-3));

  // strictly decreasing in t
  double prev = adiabatic_alpha(0.0, 2.0);
  for (int i = 1; i <= 10; ++i) {
    const double cur = adiabatic_alpha(i / 10.0, 2.0);
    CHECK(cur < prev);
    prev = cur;
  }

  CHECK_THROWS_AS(adiabatic_alpha(0.5, 0.0), DomainError);
  CHECK_THROWS_AS(adiabatic_alpha(0.5, -1.0), DomainError);
  CHECK_THROWS_AS(adiabatic_alpha(-0.1, 1.0), DomainError);
  CHECK_THROWS_AS(adiabatic_alpha(1.1, 1.0), DomainError);
}

TEST_CASE("natural step with unit information matrix returns the gradient") {
  SampleBatch batch;
  batch.points = Eigen::MatrixXd::Zero(4, 1);
  batch.log_density = Eigen::VectorXd::Zero(4);
  batch.score.resize(4, 2);
  batch.score << 1, 1, 1, -1, -1, 1, -1, -1;

  Eigen::VectorXd g(2);
  g << 0.3, -1.7;
  const Eigen::VectorXd dir = natural_step(batch, g, 0.0);
  CHECK(dir[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(dir[1] == doctest::Approx(-1.7).epsilon(1e-12));
}

TEST_CASE("natural step with zero information matrix rescales by the damping") {
  SampleBatch batch;
  batch.points = Eigen::MatrixXd::Zero(3, 1);
  batch.log_density = Eigen::VectorXd::Zero(3);
  batch.score.resize(3, 2);
  batch.score << 0.7, -0.3, 0.7, -0.3, 0.7, -0.3;

  Eigen::VectorXd g(2);
  g << 1.0, 2.0;
  const Eigen::VectorXd dir = natural_step(batch, g, 0.1);
  CHECK(dir[0] == doctest::Approx(10.0).epsilon(1e-10));
  CHECK(dir[1] == doctest::Approx(20.0).epsilon(1e-10));

  CHECK_THROWS_AS(natural_step(batch, g, 0.0), SingularError);
}

TEST_CASE("natural step matches the analytic preconditioner on a gaussian family") {
  GaussianMeanLogSigma family(0.3, -0.2);
  RngStream rng(314);
  SampleBatch batch = family.sample(20000, rng);
  fill_scores(family, batch);

  Eigen::VectorXd g(2);
  g << 0.8, -0.5;
  const Eigen::VectorXd dir = natural_step(batch, g, 0.0);
  // Information matrix of (mu, log sigma) is diag(1/sigma^2, 2).
  const double s2 = std::exp(-0.4);
  CHECK(dir[0] == doctest::Approx(0.8 * s2).epsilon(0.05));
  CHECK(dir[1] == doctest::Approx(-0.25).epsilon(0.05));
}

TEST_CASE("adam first step is a signed step of size lr") {
  AdamState state = AdamState::zeros(2);
  Eigen::VectorXd g(2);
  g << 0.3, -2.0;
  const Eigen::VectorXd delta = adam_update(state, g, 0.01);
  CHECK(delta[0] == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(delta[1] == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("adam with zero direction never moves") {
  AdamState state = AdamState::zeros(3);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd delta = adam_update(state, zero, 0.05);
    CHECK(delta.norm() == 0.0);
  }
}

TEST_CASE("adam with constant direction settles at step size lr") {
  // With a constant direction the bias corrections cancel exactly, so the
  // per-coordinate step magnitude is lr * |g| / (|g| + eps) from the start.
  AdamState state = AdamState::zeros(2);
  Eigen::VectorXd g(2);
  g << 1.0, -0.05;
  Eigen::VectorXd delta;
  for (int i = 0; i < 300; ++i) delta = adam_update(state, g, 0.02);
  CHECK(std::abs(delta[0]) == doctest::Approx(0.02).epsilon(1e-6));
  CHECK(std::abs(delta[1]) == doctest::Approx(0.02).epsilon(1e-5));
  CHECK(delta[0] < 0.0);
  CHECK(delta[1] > 0.0);

  Eigen::VectorXd wrong(3);
  wrong << 1, 2, 3;
  CHECK_THROWS_AS(adam_update(state, wrong, 0.01), DomainError);
}

TEST_CASE("flow distance penalty closed forms") {
  RngStream rng(7);
  Eigen::MatrixXd z(5, 3);
  for (int i = 0; i < 5; ++i) z.row(i) = rng.normal_vector(3);

  CHECK(flow_distance_penalty(z, z, 3.0) == 0.0);
  CHECK(flow_distance_penalty(z, z, 0.0) == 0.0);

  Eigen::RowVector3d mu(0.5, -1.0, 2.0);
  Eigen::MatrixXd shifted = z.rowwise() + mu;
  CHECK(flow_distance_penalty(z, shifted, 2.0) == 10.5);

  Eigen::MatrixXd bad(4, 3);
  CHECK_THROWS_AS(flow_distance_penalty(z, bad, 1.0), DomainError);
}

TEST_CASE("config validation rejects out-of-range settings") {
  OptimizerConfig good;
  CHECK_NOTHROW(validate(good));
  OptimizerConfig zero_lr = good;
  zero_lr.lr0 = 0.0;
  CHECK_NOTHROW(validate(zero_lr));

  auto expect_bad = [](auto&& tweak) {
    OptimizerConfig c;
    tweak(c);
    CHECK_THROWS_AS(validate(c), DomainError);
  };
  expect_bad([](OptimizerConfig& c) { c.batch = 0; });
  expect_bad([](OptimizerConfig& c) { c.iterations = 0; });
  expect_bad([](OptimizerConfig& c) { c.lr0 = -0.01; });
  expect_bad([](OptimizerConfig& c) { c.gamma = -0.1; });
  expect_bad([](OptimizerConfig& c) {
    c.use_natural_gradient = true;
    c.gamma = 0.0;
  });
  expect_bad([](OptimizerConfig& c) { c.beta1 = 1.0; });
  expect_bad([](OptimizerConfig& c) { c.beta2 = -0.2; });
  expect_bad([](OptimizerConfig& c) { c.eps = 0.0; });
  expect_bad([](OptimizerConfig& c) { c.adiabatic_k = -2.0; });
  expect_bad([](OptimizerConfig& c) { c.penalty_weight0 = -1.0; });
  expect_bad([](OptimizerConfig& c) { c.grad_clip = 0.0; });
  expect_bad([](OptimizerConfig& c) { c.eval_batch = 1; });
}

TEST_CASE("training the width of a gaussian onto the oscillator ground state") {
  FlowModel model = affine_flow_1d(11);
  const QuarticHamiltonian h = oscillator_hamiltonian(1);
  OptimizerConfig cfg;
  cfg.iterations = 300;
  cfg.batch = 256;
  cfg.eval_batch = 20000;
  cfg.seed = 3;
  cfg.determinism = true;

  const TrainResult r = train_flow(model, false, h, cfg);
  REQUIRE(r.history.size() == 300);

  // The exact ground-state energy is 1/2; the grid value of the trained
  // state must sit just above it.
  CHECK(r.quadrature_energy > 0.4999);
  CHECK(r.quadrature_energy < 0.503);
  CHECK(std::abs(r.final_energy - r.quadrature_energy) <
        5.0 * r.final_std_error);

  // Trial states can only sit above the ground state, up to batch noise.
  for (const HistoryRow& row : r.history) {
    CHECK(row.energy + 4.0 * row.std_error >= 0.5);
    CHECK(std::isfinite(row.grad_norm));
    CHECK(row.alpha == 1.0);
    CHECK(row.seconds == 0.0);
  }

  // The recorded schedule is the cosine decay itself.
  for (int t = 0; t < 300; t += 37) {
    CHECK(r.history[t].lr == cosine_lr(t, 300, cfg.lr0));
  }

  // Window medians fall from the identity-start energy toward 1/2.
  std::vector<double> first, last;
  for (int t = 0; t < 10; ++t) first.push_back(r.history[t].energy);
  for (int t = 290; t < 300; ++t) last.push_back(r.history[t].energy);
  CHECK(median_of(last) < median_of(first) - 0.05);

  // The trained affine map is the exact solution x = z / sqrt(2).
  CHECK(model.parameters()[0] ==
        doctest::Approx(-0.5 * std::log(2.0)).epsilon(0.05));
  CHECK(std::abs(model.parameters()[1]) < 0.05);
}

TEST_CASE("zero learning rate leaves the parameters untouched") {
  FlowModel model = affine_flow_1d(21);
  const Eigen::VectorXd before = model.parameters();
  const QuarticHamiltonian h = oscillator_hamiltonian(1);
  OptimizerConfig cfg;
  cfg.iterations = 10;
  cfg.batch = 64;
  cfg.eval_batch = 500;
  cfg.lr0 = 0.0;
  cfg.seed = 4;
  cfg.determinism = true;

  const TrainResult r = train_flow(model, false, h, cfg);
  CHECK(r.history.size() == 10);
  CHECK((model.parameters().array() == before.array()).all());
  for (const HistoryRow& row : r.history) CHECK(row.lr == 0.0);
}

TEST_CASE("same seed reproduces the run byte for byte") {
  const QuarticHamiltonian h = oscillator_hamiltonian(1);
  OptimizerConfig cfg;
  cfg.iterations = 40;
  cfg.batch = 64;
  cfg.eval_batch = 1000;
  cfg.seed = 77;
  cfg.determinism = true;

  FlowModel m1 = affine_flow_1d(5);
  FlowModel m2 = affine_flow_1d(5);
  const TrainResult r1 = train_flow(m1, false, h, cfg);
  const TrainResult r2 = train_flow(m2, false, h, cfg);

  REQUIRE(r1.history.size() == r2.history.size());
  for (std::size_t i = 0; i < r1.history.size(); ++i) {
    CHECK(r1.history[i].energy == r2.history[i].energy);
    CHECK(r1.history[i].std_error == r2.history[i].std_error);
    CHECK(r1.history[i].grad_norm == r2.history[i].grad_norm);
    CHECK(r1.history[i].seconds == 0.0);
  }
  CHECK(r1.final_energy == r2.final_energy);
  CHECK((m1.parameters().array() == m2.parameters().array()).all());

  FlowModel m3 = affine_flow_1d(5);
  OptimizerConfig other = cfg;
  other.seed = 78;
  const TrainResult r3 = train_flow(m3, false, h, other);
  CHECK(r3.history.front().energy != r1.history.front().energy);
}

TEST_CASE("runaway steps trip the divergence guard and keep the history") {
  FlowModel model = affine_flow_1d(3);
  const QuarticHamiltonian h = oscillator_hamiltonian(1);
  OptimizerConfig cfg;
  cfg.iterations = 200;
  cfg.batch = 32;
  cfg.eval_batch = 100;
  cfg.seed = 5;
  cfg.lr0 = 3.0;
  cfg.grad_clip = 10.0;
  cfg.use_adam = false;
  cfg.use_natural_gradient = false;
  cfg.determinism = true;

  bool threw = false;
  try {
    train_flow(model, false, h, cfg);
  } catch (const TrainDiverged& e) {
    threw = true;
    CHECK(e.history.size() >= 51);
    CHECK(e.history.size() < 200);
    CHECK(std::isfinite(e.history.front().energy));
  }
  CHECK(threw);
}

TEST_CASE("strong transport penalty pins the flow to the identity") {
  const QuarticHamiltonian h = oscillator_hamiltonian(1);
  OptimizerConfig cfg;
  cfg.iterations = 30;
  cfg.batch = 128;
  cfg.eval_batch = 500;
  cfg.seed = 12;
  cfg.determinism = true;

  FlowModel free_model = affine_flow_1d(9);
  train_flow(free_model, false, h, cfg);

  OptimizerConfig pinned = cfg;
  pinned.penalty_weight0 = 1000.0;
  FlowModel pinned_model = affine_flow_1d(9);
  train_flow(pinned_model, false, h, pinned);

  CHECK(pinned_model.parameters().norm() < free_model.parameters().norm());
}

TEST_CASE("quadratic-term schedule is recorded in the history") {
  FlowModel model = affine_flow_1d(31);
  QuarticHamiltonian h = oscillator_hamiltonian(1);
  OptimizerConfig cfg;
  cfg.iterations = 21;
  cfg.batch = 32;
  cfg.eval_batch = 500;
  cfg.seed = 6;
  cfg.adiabatic_k = 3.0;
  cfg.determinism = true;

  const TrainResult r = train_flow(model, false, h, cfg);
  CHECK(r.history.front().alpha == 1.0);
  CHECK(r.history.back().alpha == 0.0);
  CHECK(r.history[10].alpha ==
        doctest::Approx(adiabatic_alpha(0.5, 3.0)).epsilon(1e-14));

  FlowModel model2 = affine_flow_1d(31);
  OptimizerConfig rev = cfg;
  rev.reverse_adiabatic = true;
  const TrainResult rr = train_flow(model2, false, h, rev);
  CHECK(rr.history.front().alpha == 0.0);
  CHECK(rr.history.back().alpha == 1.0);
}

TEST_CASE("symmetrized coupling flow trains in two dimensions") {
  FlowConfig fc;
  fc.dim = 2;
  fc.couplings = 2;
  fc.affine_layers = 1;
  fc.hidden_width = 8;
  fc.hidden_depth = 1;
  FlowModel model(fc);
  RngStream init(7);
  model.initialize(init);

  const QuarticHamiltonian h = random_hamiltonian(2, 42);
  OptimizerConfig cfg;
  cfg.iterations = 40;
  cfg.batch = 64;
  cfg.eval_batch = 2000;
  cfg.seed = 9;
  cfg.determinism = true;

  const TrainResult r = train_flow(model, true, h, cfg);
  REQUIRE(r.history.size() == 40);
  for (const HistoryRow& row : r.history) {
    CHECK(std::isfinite(row.energy));
    CHECK(std::isfinite(row.grad_norm));
  }
  CHECK(std::isfinite(r.final_energy));
  CHECK(std::isnan(r.quadrature_energy));

  // The trained density respects the sign symmetry exactly.
  SymmetrizedDensity sym(model);
  RngStream rng(123);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd x = rng.normal_vector(2);
    CHECK(sym.log_prob(x) == sym.log_prob(-x));
  }
}

TEST_CASE("training validates dimensions and configuration") {
  FlowModel model = affine_flow_1d(3);
  const QuarticHamiltonian h2 = oscillator_hamiltonian(2);
  OptimizerConfig cfg;
  cfg.iterations = 2;
  cfg.batch = 8;
  cfg.eval_batch = 16;
  CHECK_THROWS_AS(train_flow(model, false, h2, cfg), DomainError);

  const QuarticHamiltonian h1 = oscillator_hamiltonian(1);
  OptimizerConfig bad = cfg;
  bad.batch = 0;
  CHECK_THROWS_AS(train_flow(model, false, h1, bad), DomainError);
}

TEST_SUITE_END();
