#pragma once

#include <stdexcept>
#include <string>

namespace ov {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violated API contract, e.g. an adjoint invoked with a stale forward cache.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed wire frame or shape mismatch from a score endpoint.
struct ProtocolError : OracleError {
  using OracleError::OracleError;
};

// Transport failed after the full retry budget.
struct OracleUnavailableError : OracleError {
  using OracleError::OracleError;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OptimizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ov
