#pragma once

#include <cassert>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace flowvmc::ad {

enum class Op : std::uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kExp,
  kLog,
  kTanh,
  kSqrt,
};

struct Node {
  double val;
  std::int32_t a;
  std::int32_t b;
  Op op;
};

class Tape;

/// Handle to a scalar recorded on a Tape. Arithmetic on Vars appends nodes
/// eagerly, so values are always available.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::int32_t idx) : tape_(tape), idx_(idx) {}

  double value() const;
  std::int32_t index() const { return idx_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::int32_t idx_ = -1;
};

/**
 * Flat arena of operation nodes for reverse-mode differentiation.
 *
 * backward() records the adjoint arithmetic on the tape itself, so the
 * returned gradients are Vars that can be differentiated again. That is what
 * lets a loss built from an inner gradient (an input-score term) be
 * differentiated with respect to the parameters in one more sweep.
 * backward_values() is the cheap variant for when no higher derivative is
 * needed.
 *
 * Typical per-sample use rewinds the tape to a mark after extracting the
 * gradient values, keeping the leaf nodes below the mark valid.
 */
class Tape {
 public:
  Tape() { nodes_.reserve(1 << 14); }

  Var leaf(double v) { return raw(Op::kLeaf, v, -1, -1); }

  std::vector<Var> leaves(const Eigen::VectorXd& v);

  std::size_t size() const { return nodes_.size(); }

  /// Drops every node at index >= mark. Handles above the mark become
  /// invalid; handles below stay usable.
  void rewind(std::size_t mark) {
    assert(mark <= nodes_.size());
    nodes_.resize(mark);
  }

  double value(std::int32_t idx) const { return nodes_[idx].val; }

  Var raw(Op op, double val, std::int32_t a, std::int32_t b);

  /// Graph-mode reverse sweep from scalar y: returns d y / d w for each w in
  /// wrt as differentiable Vars.
  std::vector<Var> backward(const Var& y, std::span<const Var> wrt);

  /// Value-only reverse sweep; records nothing on the tape.
  Eigen::VectorXd backward_values(const Var& y, std::span<const Var> wrt);

 private:
  std::vector<Node> nodes_;
};

inline double Var::value() const { return tape_->value(idx_); }

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);

Var operator+(const Var& a, double c);
Var operator+(double c, const Var& b);
Var operator-(const Var& a, double c);
Var operator-(double c, const Var& b);
Var operator*(const Var& a, double c);
Var operator*(double c, const Var& b);
Var operator/(const Var& a, double c);
Var operator/(double c, const Var& b);

Var exp(const Var& a);
Var log(const Var& a);
Var tanh(const Var& a);
Var sqrt(const Var& a);
Var square(const Var& a);

/// Numerically stable log(exp(a) + exp(b)), symmetric in its arguments so
/// that swapped operands give the bit-identical result.
Var logsumexp2(const Var& a, const Var& b);
double logsumexp2(double a, double b);

}  // namespace flowvmc::ad
