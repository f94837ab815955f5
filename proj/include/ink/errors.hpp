#pragma once

#include <stdexcept>
#include <string>

namespace ink {

// Bad arguments: dimension mismatch, out-of-range index, malformed input file.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A factorization or estimator hit a state its preconditions rule out.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An algorithmic invariant was broken at runtime (e.g. dictionary over its hard cap).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace ink
