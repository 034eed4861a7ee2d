#pragma once

#include <stdexcept>
#include <string>

namespace tridentnav {

// Base class for every failure raised by this library, so callers that do not
// care about the distinction can catch a single type.
class NavError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (bad CSV row, non-monotonic
// timestamps, unknown config key).  Messages carry the offending line or
// sample index.
class IngestionError : public NavError {
 public:
  using NavError::NavError;
};

// Invalid trajectory or run specification (bad segment parameters, rates out
// of range).  Messages name the offending field or segment.
class SpecError : public NavError {
 public:
  using NavError::NavError;
};

// A documented precondition of an operation was violated by the caller
// (non-unit attitude quaternion, non-pure imaginary argument, bad dt).
class ContractViolation : public NavError {
 public:
  using NavError::NavError;
};

// Numerical health failure: covariance lost positive semi-definiteness,
// a state stopped being finite, or normalization could not be performed.
class NumericalError : public NavError {
 public:
  using NavError::NavError;
};

// The filter's error estimate left the small-angle regime; the run cannot
// continue meaningfully.
class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Not enough (or unusable) data to bootstrap the filter: too short a
// stationary window, no GNSS fix, or a degenerate leveling solution.
class InitializationError : public NavError {
 public:
  using NavError::NavError;
};

}  // namespace tridentnav
