#pragma once

#include <stdexcept>
#include <string>

namespace pathoram {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller violated a documented precondition (out-of-range id, bad level, ...).
struct PreconditionError : Error {
  using Error::Error;
};

// Instance parameters disagree (client vs. backend geometry, bad experiment config).
struct ConfigError : Error {
  using Error::Error;
};

// Malformed plaintext bucket (wrong slot count / block length).
struct SerializationError : Error {
  using Error::Error;
};

// Wrong-size sealed record or malformed wire frame.
struct FramingError : Error {
  using Error::Error;
};

// Bucket index outside the tree or not a valid path.
struct AddressingError : Error {
  using Error::Error;
};

// AEAD authentication or Merkle root mismatch.
struct IntegrityError : Error {
  using Error::Error;
};

// Socket-level failure; retryable after reconnect.
struct TransportError : Error {
  using Error::Error;
};

// Protocol version / parameter mismatch during HELLO.
struct HandshakeError : Error {
  using Error::Error;
};

// Server state contradicts a protocol invariant (e.g. duplicate block id on one path).
struct CorruptionError : Error {
  using Error::Error;
};

// Disabled feature or unusable request (debug hooks off, insufficient samples, ...).
struct UsageError : Error {
  using Error::Error;
};

}  // namespace pathoram
