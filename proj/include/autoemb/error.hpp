#pragma once

#include <stdexcept>
#include <string>

namespace autoemb {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes (both shapes are spelled out in the message).
struct ShapeError : Error {
  using Error::Error;
};

// API contract violations: non-scalar backward, missing gradients,
// mismatched labels, out-of-range lookups.
struct ContractError : Error {
  using Error::Error;
};

// Invalid configuration values.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed input data (carries a line number where applicable).
struct IngestError : Error {
  using Error::Error;
};

// Bad command-line usage; mapped to exit code 2.
struct UsageError : Error {
  using Error::Error;
};

} // namespace autoemb
