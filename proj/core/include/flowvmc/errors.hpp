#pragma once

#include <stdexcept>
#include <string>

namespace flowvmc {

// A matrix required to be symmetric positive definite failed the check
// (non-positive pivot, asymmetry, or indefiniteness).
struct NotSpdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Undamped solve hit a degenerate system; raise the damping instead.
struct SingularError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A forward evaluation or integration produced inf/nan.
struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input outside the mathematical domain of the operation.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An optimization run blew past its divergence guard.
struct DivergedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A batch is missing a field (scores, gradients, local energies) that the
// requested estimator needs.
struct MissingFieldError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File or serialization failure.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace flowvmc
