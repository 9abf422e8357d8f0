#include "pathoram/wire.hpp"

#include <cstring>

#include "pathoram/errors.hpp"

namespace pathoram::wire {

void put_u32_be(std::uint8_t* out, std::uint32_t v) {
  out[0] = static_cast<std::uint8_t>(v >> 24);
  out[1] = static_cast<std::uint8_t>(v >> 16);
  out[2] = static_cast<std::uint8_t>(v >> 8);
  out[3] = static_cast<std::uint8_t>(v);
}

std::uint32_t get_u32_be(const std::uint8_t* in) {
  return (static_cast<std::uint32_t>(in[0]) << 24) |
         (static_cast<std::uint32_t>(in[1]) << 16) |
         (static_cast<std::uint32_t>(in[2]) << 8) | static_cast<std::uint32_t>(in[3]);
}

void put_u64_be(std::uint8_t* out, std::uint64_t v) {
  put_u32_be(out, static_cast<std::uint32_t>(v >> 32));
  put_u32_be(out + 4, static_cast<std::uint32_t>(v));
}

std::uint64_t get_u64_be(const std::uint8_t* in) {
  return (static_cast<std::uint64_t>(get_u32_be(in)) << 32) | get_u32_be(in + 4);
}

HelloBody HelloBody::from(const TreeGeometry& g, bool integrity_enabled) {
  HelloBody b;
  b.height = g.height;
  b.slots_per_bucket = g.slots_per_bucket;
  b.block_size = g.block_size;
  b.capacity = g.capacity;
  b.record_size =
      static_cast<std::uint32_t>(sealed_record_size(g.slots_per_bucket, g.block_size));
  b.integrity = integrity_enabled ? 1 : 0;
  return b;
}

std::string HelloBody::mismatch_against(const HelloBody& other) const {
  if (version != other.version) return "protocol_version";
  if (height != other.height) return "height";
  if (slots_per_bucket != other.slots_per_bucket) return "slots_per_bucket";
  if (block_size != other.block_size) return "block_size";
  if (capacity != other.capacity) return "capacity";
  if (record_size != other.record_size) return "record_size";
  if (integrity != other.integrity) return "integrity";
  return "";
}

std::size_t max_frame_size(const TreeGeometry& g) {
  const std::size_t record = sealed_record_size(g.slots_per_bucket, g.block_size);
  // Largest legitimate frame is a debug snapshot (bucket_count records); a
  // path response is (L+1) records + L digests. Allow some slack for headers.
  const std::size_t snapshot = static_cast<std::size_t>(g.bucket_count) * record;
  const std::size_t path = static_cast<std::size_t>(g.height + 1) * record +
                           static_cast<std::size_t>(g.height) * kDigestSize;
  return std::max(snapshot, path) + 1024;
}

Bytes encode_frame(Opcode opcode, std::span<const std::uint8_t> payload) {
  Bytes out(4 + 1 + payload.size());
  put_u32_be(out.data(), static_cast<std::uint32_t>(1 + payload.size()));
  out[4] = static_cast<std::uint8_t>(opcode);
  if (!payload.empty()) std::memcpy(out.data() + 5, payload.data(), payload.size());
  return out;
}

Bytes encode_hello(const HelloBody& body) {
  Bytes out(kHelloBodySize);
  out[0] = body.version;
  put_u32_be(out.data() + 1, body.height);
  put_u32_be(out.data() + 5, body.slots_per_bucket);
  put_u32_be(out.data() + 9, body.block_size);
  put_u64_be(out.data() + 13, body.capacity);
  put_u32_be(out.data() + 21, body.record_size);
  out[25] = body.integrity;
  return out;
}

HelloBody decode_hello(std::span<const std::uint8_t> payload) {
  if (payload.size() != kHelloBodySize) throw FramingError("bad HELLO payload size");
  HelloBody b;
  b.version = payload[0];
  b.height = get_u32_be(payload.data() + 1);
  b.slots_per_bucket = get_u32_be(payload.data() + 5);
  b.block_size = get_u32_be(payload.data() + 9);
  b.capacity = get_u64_be(payload.data() + 13);
  b.record_size = get_u32_be(payload.data() + 21);
  b.integrity = payload[25];
  return b;
}

Bytes encode_error(ErrorCode code, std::string_view message) {
  if (message.size() > 0xFFFF) message = message.substr(0, 0xFFFF);
  Bytes out(1 + 2 + message.size());
  out[0] = static_cast<std::uint8_t>(code);
  out[1] = static_cast<std::uint8_t>(message.size() >> 8);
  out[2] = static_cast<std::uint8_t>(message.size());
  std::memcpy(out.data() + 3, message.data(), message.size());
  return out;
}

std::pair<ErrorCode, std::string> decode_error(std::span<const std::uint8_t> payload) {
  if (payload.size() < 3) throw FramingError("bad ERROR payload size");
  const std::size_t len = (static_cast<std::size_t>(payload[1]) << 8) | payload[2];
  if (payload.size() != 3 + len) throw FramingError("bad ERROR payload size");
  return {static_cast<ErrorCode>(payload[0]),
          std::string(reinterpret_cast<const char*>(payload.data() + 3), len)};
}

}  // namespace pathoram::wire
