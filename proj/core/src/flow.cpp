#include "flowvmc/flow.hpp"

#include <cmath>
#include <utility>

#include "flowvmc/errors.hpp"

namespace flowvmc {

LayerSpec affine_layer() {
  LayerSpec ls;
  ls.kind = LayerKind::kAffine;
  return ls;
}

LayerSpec coupling_layer(int dim, int parity, int hidden_width,
                         int hidden_depth) {
  if (dim < 2) throw DomainError("coupling layer needs dim >= 2");
  if (parity != 0 && parity != 1)
    throw DomainError("coupling parity must be 0 or 1");
  int frozen = 0;
  for (int i = 0; i < dim; ++i)
    if (i % 2 == parity) ++frozen;
  const int active = dim - frozen;
  LayerSpec ls;
  ls.kind = LayerKind::kCoupling;
  ls.parity = parity;
  ls.scale = MlpSpec{frozen, active, hidden_width, hidden_depth};
  ls.shift = MlpSpec{frozen, active, hidden_width, hidden_depth};
  return ls;
}

FlowModel::FlowModel(int dim, std::vector<LayerSpec> layers)
    : dim_(dim), layers_(std::move(layers)) {
  if (dim_ < 1) throw DomainError("flow dim must be >= 1");
  if (layers_.empty()) throw DomainError("flow needs at least one layer");
  int n = 0;
  for (const auto& ls : layers_) {
    if (ls.kind == LayerKind::kCoupling && dim_ < 2)
      throw DomainError("coupling layer needs dim >= 2");
    n += ls.param_count(dim_);
  }
  theta_ = Eigen::VectorXd::Zero(n);
  // Amplitudes start at 1 so a zeroed scale net still has unit slope in the
  // tanh argument; the initial map stays the identity either way.
  std::size_t off = 0;
  for (const auto& ls : layers_) {
    const std::size_t count = ls.param_count(dim_);
    if (ls.kind == LayerKind::kCoupling) theta_[off + count - 1] = 1.0;
    off += count;
  }
}

namespace {

std::vector<LayerSpec> layers_from_config(const FlowConfig& c) {
  std::vector<LayerSpec> layers;
  if (c.dim < 1) throw DomainError("flow dim must be >= 1");
  if (c.dim == 1) {
    if (c.affine_layers < 1)
      throw DomainError("one-dimensional flow needs affine_layers >= 1");
    for (int i = 0; i < c.affine_layers; ++i) layers.push_back(affine_layer());
  } else {
    if (c.couplings < 1) throw DomainError("flow needs couplings >= 1");
    for (int i = 0; i < c.couplings; ++i)
      layers.push_back(
          coupling_layer(c.dim, i % 2, c.hidden_width, c.hidden_depth));
  }
  return layers;
}

}  // namespace

FlowModel::FlowModel(const FlowConfig& config)
    : FlowModel(config.dim, layers_from_config(config)) {}

void FlowModel::set_parameters(const Eigen::VectorXd& theta) {
  if (theta.size() != theta_.size())
    throw DomainError("parameter vector has wrong length");
  theta_ = theta;
}

void FlowModel::initialize(RngStream& rng) {
  theta_.setZero();
  std::size_t off = 0;
  for (const auto& ls : layers_) {
    if (ls.kind == LayerKind::kAffine) {
      off += ls.param_count(dim_);
      continue;
    }
    for (const MlpSpec* net : {&ls.scale, &ls.shift}) {
      std::size_t o = off;
      int cur = net->in;
      for (int layer = 0; layer < net->depth; ++layer) {
        const double scale = std::sqrt(2.0 / (cur + net->width));
        for (int k = 0; k < net->width * cur; ++k)
          theta_[o + k] = scale * rng.normal();
        o += static_cast<std::size_t>(net->width) * (cur + 1);
        cur = net->width;
      }
      // Final layer stays zero: the fresh flow is the identity map.
      off += net->param_count();
    }
    theta_[off] = 1.0;  // amplitude
    off += 1;
  }
}

namespace {

void require_finite(const std::vector<double>& x, double logdet,
                    const char* what) {
  for (double v : x)
    if (!std::isfinite(v)) throw NonFiniteError(what);
  if (!std::isfinite(logdet)) throw NonFiniteError(what);
}

}  // namespace

FlowModel::MapResult FlowModel::forward(const Eigen::VectorXd& z) const {
  if (z.size() != dim_) throw DomainError("point has wrong dimension");
  std::vector<double> x(z.data(), z.data() + z.size());
  double logdet = 0.0;
  apply<double>({theta_.data(), static_cast<std::size_t>(theta_.size())}, x,
                logdet, /*forward=*/true);
  require_finite(x, logdet, "flow forward overflowed");
  MapResult r;
  r.point = Eigen::Map<const Eigen::VectorXd>(x.data(), dim_);
  r.logdet = logdet;
  return r;
}

FlowModel::MapResult FlowModel::inverse(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw DomainError("point has wrong dimension");
  std::vector<double> z(x.data(), x.data() + x.size());
  double logdet = 0.0;
  apply<double>({theta_.data(), static_cast<std::size_t>(theta_.size())}, z,
                logdet, /*forward=*/false);
  require_finite(z, logdet, "flow inverse overflowed");
  MapResult r;
  r.point = Eigen::Map<const Eigen::VectorXd>(z.data(), dim_);
  r.logdet = logdet;
  return r;
}

double FlowModel::log_prob(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw DomainError("point has wrong dimension");
  const double lp = log_prob_generic<double>(
      {theta_.data(), static_cast<std::size_t>(theta_.size())},
      {x.data(), static_cast<std::size_t>(x.size())}, 0.0);
  if (!std::isfinite(lp)) throw NonFiniteError("flow log density overflowed");
  return lp;
}

double FlowModel::log_psi(const Eigen::VectorXd& x) const {
  return 0.5 * log_prob(x);
}

SampleBatch FlowModel::sample(int count, RngStream& rng) const {
  if (count < 1) throw DomainError("sample count must be >= 1");
  SampleBatch batch;
  batch.points.resize(count, dim_);
  batch.log_density.resize(count);
  for (int i = 0; i < count; ++i) {
    const Eigen::VectorXd z = rng.normal_vector(dim_);
    const MapResult fwd = forward(z);
    batch.points.row(i) = fwd.point;
    batch.log_density[i] = log_prob(fwd.point);
  }
  return batch;
}

std::vector<ad::Var> FlowModel::forward_taped(ad::Tape& tape,
                                              std::span<const ad::Var> theta,
                                              std::span<const ad::Var> z,
                                              ad::Var* logdet) const {
  std::vector<ad::Var> x(z.begin(), z.end());
  ad::Var ld = tape.leaf(0.0);
  apply<ad::Var>(theta, x, ld, /*forward=*/true);
  if (logdet != nullptr) *logdet = ld;
  return x;
}

ad::Var FlowModel::log_prob_taped(ad::Tape& tape,
                                  std::span<const ad::Var> theta,
                                  std::span<const ad::Var> x) const {
  return log_prob_generic<ad::Var>(theta, x, tape.leaf(0.0));
}

double SymmetrizedDensity::log_prob(const Eigen::VectorXd& x) const {
  const double lp = model_->log_prob(x);
  const double lm = model_->log_prob(-x);
  return ad::logsumexp2(lp, lm) - std::log(2.0);
}

double SymmetrizedDensity::log_psi(const Eigen::VectorXd& x) const {
  return 0.5 * log_prob(x);
}

SampleBatch SymmetrizedDensity::sample(int count, RngStream& rng) const {
  if (count < 1) throw DomainError("sample count must be >= 1");
  const int d = model_->dim();
  SampleBatch batch;
  batch.points.resize(count, d);
  batch.log_density.resize(count);
  for (int i = 0; i < count; ++i) {
    const Eigen::VectorXd z = rng.normal_vector(d);
    Eigen::VectorXd x = model_->forward(z).point;
    if (rng.uniform() < 0.5) x = -x;
    batch.points.row(i) = x;
    batch.log_density[i] = log_prob(x);
  }
  return batch;
}

ad::Var SymmetrizedDensity::log_prob_taped(ad::Tape& tape,
                                           std::span<const ad::Var> theta,
                                           std::span<const ad::Var> x) const {
  std::vector<ad::Var> neg;
  neg.reserve(x.size());
  for (const ad::Var& xi : x) neg.push_back(-xi);
  const ad::Var lp = model_->log_prob_taped(tape, theta, x);
  const ad::Var lm = model_->log_prob_taped(
      tape, theta, {neg.data(), neg.size()});
  return ad::logsumexp2(lp, lm) - std::log(2.0);
}

}  // namespace flowvmc
