#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flowvmc/ad.hpp"
#include "flowvmc/rng.hpp"
#include "flowvmc/sample_batch.hpp"

namespace flowvmc {

/// Fully connected network shape: `depth` tanh hidden layers of `width`
/// units between a linear input and a linear output layer.
struct MlpSpec {
  int in = 0;
  int out = 0;
  int width = 0;
  int depth = 0;

  int param_count() const {
    if (depth <= 0) return out * (in + 1);
    int n = width * (in + 1);
    n += (depth - 1) * width * (width + 1);
    n += out * (width + 1);
    return n;
  }
};

enum class LayerKind { kAffine, kCoupling };

/**
 * One flow layer. An affine layer rescales and shifts every coordinate
 * independently (2·dim parameters). A coupling layer freezes the coordinates
 * whose index has the given parity and transforms the rest through scale and
 * shift networks of the frozen ones, with a learnable amplitude bounding the
 * log-scale through tanh; its parameters are [scale net | shift net | amp].
 */
struct LayerSpec {
  LayerKind kind = LayerKind::kAffine;
  int parity = 0;
  MlpSpec scale{};
  MlpSpec shift{};

  int param_count(int dim) const {
    if (kind == LayerKind::kAffine) return 2 * dim;
    return scale.param_count() + shift.param_count() + 1;
  }
};

LayerSpec affine_layer();
LayerSpec coupling_layer(int dim, int parity, int hidden_width,
                         int hidden_depth);

/// Architecture knobs for the standard model: elementwise affine layers in
/// one dimension, alternating-parity couplings otherwise.
struct FlowConfig {
  int dim = 1;
  int couplings = 4;
  int affine_layers = 1;
  int hidden_width = 64;
  int hidden_depth = 2;
};

namespace flow_detail {

template <class S>
std::vector<S> mlp_eval(const MlpSpec& spec, std::span<const S> p,
                        const std::vector<S>& input) {
  using std::tanh;
  std::vector<S> h(input.begin(), input.end());
  std::size_t off = 0;
  int cur = spec.in;
  for (int layer = 0; layer < spec.depth; ++layer) {
    const int rows = spec.width;
    const std::size_t woff = off;
    const std::size_t boff = off + static_cast<std::size_t>(rows) * cur;
    std::vector<S> next;
    next.reserve(rows);
    for (int i = 0; i < rows; ++i) {
      S acc = p[boff + i];
      for (int j = 0; j < cur; ++j)
        acc = acc + p[woff + static_cast<std::size_t>(i) * cur + j] * h[j];
      next.push_back(tanh(acc));
    }
    h = std::move(next);
    cur = rows;
    off = boff + rows;
  }
  const int rows = spec.out;
  const std::size_t woff = off;
  const std::size_t boff = off + static_cast<std::size_t>(rows) * cur;
  std::vector<S> out;
  out.reserve(rows);
  for (int i = 0; i < rows; ++i) {
    S acc = p[boff + i];
    for (int j = 0; j < cur; ++j)
      acc = acc + p[woff + static_cast<std::size_t>(i) * cur + j] * h[j];
    out.push_back(std::move(acc));
  }
  return out;
}

template <class S>
void affine_apply(std::span<const S> p, std::vector<S>& x, S& logdet,
                  bool forward) {
  using std::exp;
  const std::size_t d = x.size();
  for (std::size_t i = 0; i < d; ++i) {
    if (forward) {
      x[i] = x[i] * exp(p[i]) + p[d + i];
      logdet = logdet + p[i];
    } else {
      x[i] = (x[i] - p[d + i]) * exp(-p[i]);
      logdet = logdet - p[i];
    }
  }
}

template <class S>
void coupling_apply(const LayerSpec& ls, std::span<const S> p,
                    std::vector<S>& x, S& logdet, bool forward) {
  using std::exp;
  using std::tanh;
  const int d = static_cast<int>(x.size());
  std::vector<S> frozen;
  frozen.reserve(ls.scale.in);
  for (int i = 0; i < d; ++i)
    if (i % 2 == ls.parity) frozen.push_back(x[i]);

  const std::size_t n_scale = ls.scale.param_count();
  const std::size_t n_shift = ls.shift.param_count();
  const std::vector<S> raw_s =
      mlp_eval<S>(ls.scale, p.subspan(0, n_scale), frozen);
  const std::vector<S> t =
      mlp_eval<S>(ls.shift, p.subspan(n_scale, n_shift), frozen);
  const S& amp = p[n_scale + n_shift];

  int k = 0;
  for (int i = 0; i < d; ++i) {
    if (i % 2 == ls.parity) continue;
    const S s = amp * tanh(raw_s[k]);
    if (forward) {
      x[i] = x[i] * exp(s) + t[k];
      logdet = logdet + s;
    } else {
      x[i] = (x[i] - t[k]) * exp(-s);
      logdet = logdet - s;
    }
    ++k;
  }
}

/// log of the standard-normal density in x.size() dimensions.
template <class S>
S base_log_density(std::span<const S> z) {
  S sum = z[0] * z[0];
  for (std::size_t i = 1; i < z.size(); ++i) sum = sum + z[i] * z[i];
  constexpr double kLog2Pi = 1.8378770664093454836;
  return -0.5 * sum - 0.5 * static_cast<double>(z.size()) * kLog2Pi;
}

}  // namespace flow_detail

/**
 * Normalizing flow over a standard-normal base: an ordered stack of layers
 * mapping base samples z to field configurations x = f_θ(z). The pushforward
 * density is normalized by construction, and ψ_θ = √p_θ is the induced real
 * positive trial wavefunction.
 */
class FlowModel {
 public:
  FlowModel() = default;
  FlowModel(int dim, std::vector<LayerSpec> layers);
  explicit FlowModel(const FlowConfig& config);

  int dim() const { return dim_; }
  int param_count() const { return static_cast<int>(theta_.size()); }
  const std::vector<LayerSpec>& layers() const { return layers_; }

  const Eigen::VectorXd& parameters() const { return theta_; }
  void set_parameters(const Eigen::VectorXd& theta);

  /// Draws fresh network weights: hidden layers get variance-scaled normal
  /// weights, final layers stay zero so the initial map is the identity.
  void initialize(RngStream& rng);

  struct MapResult {
    Eigen::VectorXd point;
    double logdet = 0.0;
  };

  MapResult forward(const Eigen::VectorXd& z) const;
  MapResult inverse(const Eigen::VectorXd& x) const;

  double log_prob(const Eigen::VectorXd& x) const;
  double log_psi(const Eigen::VectorXd& x) const;

  /// i.i.d. samples with per-sample log density.
  SampleBatch sample(int count, RngStream& rng) const;

  /// Applies the layer stack to taped scalars; x is transformed in place and
  /// the log-Jacobian accumulates into logdet (caller-initialized).
  template <class S>
  void apply(std::span<const S> theta, std::vector<S>& x, S& logdet,
             bool forward) const {
    std::size_t off = 0;
    const auto run = [&](const LayerSpec& ls) {
      const std::size_t n = ls.param_count(dim_);
      const auto p = theta.subspan(off, n);
      if (ls.kind == LayerKind::kAffine)
        flow_detail::affine_apply<S>(p, x, logdet, forward);
      else
        flow_detail::coupling_apply<S>(ls, p, x, logdet, forward);
      off += n;
    };
    if (forward) {
      for (const auto& ls : layers_) run(ls);
    } else {
      // Parameter offsets still run front to back; gather them first.
      std::vector<std::size_t> offs(layers_.size());
      std::size_t o = 0;
      for (std::size_t i = 0; i < layers_.size(); ++i) {
        offs[i] = o;
        o += layers_[i].param_count(dim_);
      }
      for (std::size_t i = layers_.size(); i-- > 0;) {
        off = offs[i];
        run(layers_[i]);
      }
    }
  }

  template <class S>
  S log_prob_generic(std::span<const S> theta, std::span<const S> x,
                     S logdet) const {
    std::vector<S> z(x.begin(), x.end());
    apply<S>(theta, z, logdet, /*forward=*/false);
    return flow_detail::base_log_density<S>(std::span<const S>(z)) + logdet;
  }

  /// Taped pushforward of base points; logdet output is optional.
  std::vector<ad::Var> forward_taped(ad::Tape& tape,
                                     std::span<const ad::Var> theta,
                                     std::span<const ad::Var> z,
                                     ad::Var* logdet = nullptr) const;

  ad::Var log_prob_taped(ad::Tape& tape, std::span<const ad::Var> theta,
                         std::span<const ad::Var> x) const;

 private:
  int dim_ = 0;
  std::vector<LayerSpec> layers_;
  Eigen::VectorXd theta_;
};

/// Z2-symmetrized view of a flow: the density is the even mixture
/// ½(p_θ(x) + p_θ(−x)), so the induced wavefunction respects the x ↦ −x
/// symmetry of the potential exactly.
class SymmetrizedDensity {
 public:
  explicit SymmetrizedDensity(const FlowModel& model) : model_(&model) {}

  const FlowModel& model() const { return *model_; }

  double log_prob(const Eigen::VectorXd& x) const;
  double log_psi(const Eigen::VectorXd& x) const;

  /// Samples the mixture: draw from the flow, then negate with probability ½.
  SampleBatch sample(int count, RngStream& rng) const;

  ad::Var log_prob_taped(ad::Tape& tape, std::span<const ad::Var> theta,
                         std::span<const ad::Var> x) const;

 private:
  const FlowModel* model_;
};

/// Writes a versioned JSON checkpoint: architecture plus flat parameters,
/// with doubles preserved bit for bit.
void save_flow(const FlowModel& model, bool symmetrized,
               const std::string& path);

struct LoadedFlow {
  FlowModel model;
  bool symmetrized = false;
};

LoadedFlow load_flow(const std::string& path);

}  // namespace flowvmc
