#pragma once

#include <stdexcept>
#include <string>

namespace acp {

// Bad input at an API boundary (malformed parameters, unknown config keys, ...).
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Input is well formed but outside the region where an operation is defined.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// A Monte Carlo estimator produced no usable samples.
struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The exact oracle refuses state spaces above its cap.
struct StateCapExceeded : std::length_error {
  using std::length_error::length_error;
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

}  // namespace acp
