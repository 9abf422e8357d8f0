#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include "pathoram/bucket.hpp"
#include "pathoram/crypto.hpp"
#include "pathoram/geometry.hpp"

namespace pathoram::wire {

// Length-prefixed binary framing over a reliable byte stream. Every frame is
//   length  u32 big-endian   (number of bytes that follow)
//   opcode  u8
//   payload opcode-specific
// Multi-byte payload integers are big-endian.

inline constexpr std::uint8_t kProtocolVersion = 1;

enum class Opcode : std::uint8_t {
  kHello = 1,
  kOk = 2,
  kError = 3,
  kReadPath = 4,
  kWritePath = 5,
  kSnapshotDebug = 6,
};

enum class ErrorCode : std::uint8_t {
  kHandshakeMismatch = 1,
  kFraming = 2,
  kAddressing = 3,
  kIo = 4,
  kDebugDisabled = 5,
  kProtocol = 6,
};

struct Frame {
  Opcode opcode = Opcode::kError;
  Bytes payload;
};

/// HELLO body (both directions): protocol version and instance parameters.
/// The client sends its configuration; the server replies with its own, and
/// each side aborts on any field mismatch.
struct HelloBody {
  std::uint8_t version = kProtocolVersion;
  std::uint32_t height = 0;
  std::uint32_t slots_per_bucket = 0;
  std::uint32_t block_size = 0;
  std::uint64_t capacity = 0;
  std::uint32_t record_size = 0;
  std::uint8_t integrity = 0;

  static HelloBody from(const TreeGeometry& g, bool integrity_enabled);
  /// Empty string when equal, otherwise the name of the first differing field.
  std::string mismatch_against(const HelloBody& other) const;
};

inline constexpr std::size_t kHelloBodySize = 1 + 4 + 4 + 4 + 8 + 4 + 1;

/// Upper bound on any frame for a given geometry (path responses dominate).
std::size_t max_frame_size(const TreeGeometry& g);

Bytes encode_frame(Opcode opcode, std::span<const std::uint8_t> payload);

Bytes encode_hello(const HelloBody& body);
HelloBody decode_hello(std::span<const std::uint8_t> payload);

Bytes encode_error(ErrorCode code, std::string_view message);
std::pair<ErrorCode, std::string> decode_error(std::span<const std::uint8_t> payload);

void put_u32_be(std::uint8_t* out, std::uint32_t v);
std::uint32_t get_u32_be(const std::uint8_t* in);
void put_u64_be(std::uint8_t* out, std::uint64_t v);
std::uint64_t get_u64_be(const std::uint8_t* in);

}  // namespace pathoram::wire
