#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "pathoram/geometry.hpp"

namespace pathoram {

using Bytes = std::vector<std::uint8_t>;

/// A decrypted bucket: exactly Z slots, each holding a real block or a dummy.
/// The canonical plaintext serialization (one byte real/dummy flag, 8-byte
/// little-endian block id, B data bytes per slot) has constant length
/// Z * (9 + B) regardless of how many slots are real; dummy slots are filled
/// with random bytes at seal time so the plaintext carries no structure.
class PlainBucket {
 public:
  PlainBucket(std::uint32_t slots, std::uint32_t block_size);

  std::uint32_t slot_count() const { return static_cast<std::uint32_t>(slots_.size()); }
  std::uint32_t block_size() const { return block_size_; }

  /// Places a real block into slot `i`; data must be exactly B bytes.
  void place(std::uint32_t i, BlockId id, Bytes data);

  bool is_real(std::uint32_t i) const { return slots_[i].real; }
  BlockId id_at(std::uint32_t i) const { return slots_[i].id; }
  const Bytes& data_at(std::uint32_t i) const { return slots_[i].data; }

  std::uint32_t real_count() const;

  /// The real (id, data) pairs, dummies filtered out, in slot order.
  std::vector<std::pair<BlockId, Bytes>> real_blocks() const;

  /// Equality over real contents; dummy filler bytes are not compared.
  bool operator==(const PlainBucket& other) const;

 private:
  struct Slot {
    bool real = false;
    BlockId id = 0;
    Bytes data;
  };
  std::vector<Slot> slots_;
  std::uint32_t block_size_;
};

inline std::size_t plain_bucket_size(std::uint32_t slots, std::uint32_t block_size) {
  return static_cast<std::size_t>(slots) * (1 + 8 + block_size);
}

}  // namespace pathoram
