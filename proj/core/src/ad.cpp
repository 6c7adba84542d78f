#include "flowvmc/ad.hpp"

#include <algorithm>
#include <cmath>

#include "flowvmc/errors.hpp"

namespace flowvmc::ad {

std::vector<Var> Tape::leaves(const Eigen::VectorXd& v) {
  std::vector<Var> out;
  out.reserve(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(leaf(v[i]));
  return out;
}

Var Tape::raw(Op op, double val, std::int32_t a, std::int32_t b) {
  if (!std::isfinite(val))
    throw NonFiniteError("tape: non-finite value in forward pass");
  nodes_.push_back(Node{val, a, b, op});
  return Var(this, static_cast<std::int32_t>(nodes_.size()) - 1);
}

namespace {

inline void check_same_tape([[maybe_unused]] const Var& a,
                            [[maybe_unused]] const Var& b) {
  assert(a.tape() == b.tape());
}

}  // namespace

Var operator+(const Var& a, const Var& b) {
  check_same_tape(a, b);
  return a.tape()->raw(Op::kAdd, a.value() + b.value(), a.index(), b.index());
}

Var operator-(const Var& a, const Var& b) {
  check_same_tape(a, b);
  return a.tape()->raw(Op::kSub, a.value() - b.value(), a.index(), b.index());
}

Var operator*(const Var& a, const Var& b) {
  check_same_tape(a, b);
  return a.tape()->raw(Op::kMul, a.value() * b.value(), a.index(), b.index());
}

Var operator/(const Var& a, const Var& b) {
  check_same_tape(a, b);
  return a.tape()->raw(Op::kDiv, a.value() / b.value(), a.index(), b.index());
}

Var operator-(const Var& a) {
  return a.tape()->raw(Op::kNeg, -a.value(), a.index(), -1);
}

Var operator+(const Var& a, double c) { return a + a.tape()->leaf(c); }
Var operator+(double c, const Var& b) { return b.tape()->leaf(c) + b; }
Var operator-(const Var& a, double c) { return a - a.tape()->leaf(c); }
Var operator-(double c, const Var& b) { return b.tape()->leaf(c) - b; }
Var operator*(const Var& a, double c) { return a * a.tape()->leaf(c); }
Var operator*(double c, const Var& b) { return b.tape()->leaf(c) * b; }
Var operator/(const Var& a, double c) { return a / a.tape()->leaf(c); }
Var operator/(double c, const Var& b) { return b.tape()->leaf(c) / b; }

Var exp(const Var& a) {
  return a.tape()->raw(Op::kExp, std::exp(a.value()), a.index(), -1);
}

Var log(const Var& a) {
  return a.tape()->raw(Op::kLog, std::log(a.value()), a.index(), -1);
}

Var tanh(const Var& a) {
  return a.tape()->raw(Op::kTanh, std::tanh(a.value()), a.index(), -1);
}

Var sqrt(const Var& a) {
  return a.tape()->raw(Op::kSqrt, std::sqrt(a.value()), a.index(), -1);
}

Var square(const Var& a) { return a * a; }

double logsumexp2(double a, double b) {
  const double m = std::max(a, b);
  const double n = std::min(a, b);
  return m + std::log1p(std::exp(n - m));
}

Var logsumexp2(const Var& a, const Var& b) {
  // The shift is a constant, so gradients reduce to the usual softmax
  // weights; ordering by value keeps the result symmetric bit for bit.
  const bool a_max = a.value() >= b.value();
  const Var& hi = a_max ? a : b;
  const Var& lo = a_max ? b : a;
  const double m = hi.value();
  return log(exp(hi - m) + exp(lo - m)) + m;
}

std::vector<Var> Tape::backward(const Var& y, std::span<const Var> wrt) {
  assert(y.tape() == this);
  const std::int32_t n = y.index() + 1;
  // adj[k] is the node index of the accumulated adjoint of node k, or -1
  // while it is still zero. Adjoint arithmetic appends nodes at indices >= n,
  // which the downward sweep never visits.
  std::vector<std::int32_t> adj(n, -1);
  adj[y.index()] = leaf(1.0).index();

  auto add_to = [&](std::int32_t target, const Var& contrib) {
    if (adj[target] == -1) {
      adj[target] = contrib.index();
    } else {
      adj[target] = (Var(this, adj[target]) + contrib).index();
    }
  };

  for (std::int32_t k = n - 1; k >= 0; --k) {
    if (adj[k] < 0) continue;
    const Node nd = nodes_[k];  // copy: pushes below may reallocate
    const Var ak(this, adj[k]);
    switch (nd.op) {
      case Op::kLeaf:
        break;
      case Op::kAdd:
        add_to(nd.a, ak);
        add_to(nd.b, ak);
        break;
      case Op::kSub:
        add_to(nd.a, ak);
        add_to(nd.b, -ak);
        break;
      case Op::kMul:
        add_to(nd.a, ak * Var(this, nd.b));
        add_to(nd.b, ak * Var(this, nd.a));
        break;
      case Op::kDiv: {
        const Var vb(this, nd.b);
        add_to(nd.a, ak / vb);
        add_to(nd.b, -(ak * Var(this, k) / vb));
        break;
      }
      case Op::kNeg:
        add_to(nd.a, -ak);
        break;
      case Op::kExp:
        add_to(nd.a, ak * Var(this, k));
        break;
      case Op::kLog:
        add_to(nd.a, ak / Var(this, nd.a));
        break;
      case Op::kTanh: {
        const Var t(this, k);
        add_to(nd.a, ak * (1.0 - t * t));
        break;
      }
      case Op::kSqrt:
        add_to(nd.a, ak / (2.0 * Var(this, k)));
        break;
    }
  }

  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const Var& w : wrt) {
    assert(w.tape() == this && w.index() < n);
    out.push_back(adj[w.index()] >= 0 ? Var(this, adj[w.index()]) : leaf(0.0));
  }
  return out;
}

Eigen::VectorXd Tape::backward_values(const Var& y, std::span<const Var> wrt) {
  assert(y.tape() == this);
  const std::int32_t n = y.index() + 1;
  std::vector<double> adj(n, 0.0);
  adj[y.index()] = 1.0;

  for (std::int32_t k = n - 1; k >= 0; --k) {
    const double ak = adj[k];
    if (ak == 0.0) continue;
    const Node& nd = nodes_[k];
    switch (nd.op) {
      case Op::kLeaf:
        break;
      case Op::kAdd:
        adj[nd.a] += ak;
        adj[nd.b] += ak;
        break;
      case Op::kSub:
        adj[nd.a] += ak;
        adj[nd.b] -= ak;
        break;
      case Op::kMul:
        adj[nd.a] += ak * nodes_[nd.b].val;
        adj[nd.b] += ak * nodes_[nd.a].val;
        break;
      case Op::kDiv:
        adj[nd.a] += ak / nodes_[nd.b].val;
        adj[nd.b] -= ak * nd.val / nodes_[nd.b].val;
        break;
      case Op::kNeg:
        adj[nd.a] -= ak;
        break;
      case Op::kExp:
        adj[nd.a] += ak * nd.val;
        break;
      case Op::kLog:
        adj[nd.a] += ak / nodes_[nd.a].val;
        break;
      case Op::kTanh:
        adj[nd.a] += ak * (1.0 - nd.val * nd.val);
        break;
      case Op::kSqrt:
        adj[nd.a] += ak / (2.0 * nd.val);
        break;
    }
  }

  Eigen::VectorXd out(static_cast<Eigen::Index>(wrt.size()));
  for (std::size_t i = 0; i < wrt.size(); ++i) out[i] = adj[wrt[i].index()];
  return out;
}

}  // namespace flowvmc::ad
