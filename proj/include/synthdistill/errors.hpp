// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SYNTHDISTILL_ERRORS_HPP_
#define SYNTHDISTILL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace synthdistill {

// Shape disagreement between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Misuse of an API precondition (e.g. backward on a non-scalar).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

// Invalid configuration value or key. Carries the offending line when known.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line(line) {}
  int line;
};

// NaN/Inf encountered in training.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File system failures and malformed persisted artifacts.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : IoError {
  using IoError::IoError;
};

// Evaluation protocol misuse (empty or single-label pair sets).
struct ProtocolError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace synthdistill

#endif  // SYNTHDISTILL_ERRORS_HPP_
