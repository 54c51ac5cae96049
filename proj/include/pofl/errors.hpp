#pragma once

#include <stdexcept>
#include <string>

namespace pofl {

// Thrown when inputs violate a documented precondition (bad parameter
// ranges, non-concave objectives, malformed serialized data, ...).
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Ciphertext/plaintext operations under mismatched keys.
struct KeyMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Integrity failures: bad garbled row, chain verification, transcript decode.
struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Protocol-level misuse (wrong phase order, missing counterpart message).
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pofl
