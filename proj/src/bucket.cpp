#include "pathoram/bucket.hpp"

#include "pathoram/errors.hpp"

namespace pathoram {

PlainBucket::PlainBucket(std::uint32_t slots, std::uint32_t block_size)
    : slots_(slots), block_size_(block_size) {
  if (slots == 0) throw SerializationError("bucket needs at least one slot");
}

void PlainBucket::place(std::uint32_t i, BlockId id, Bytes data) {
  if (i >= slots_.size()) throw SerializationError("slot index out of range");
  if (data.size() != block_size_) {
    throw SerializationError("block data must be exactly " +
                             std::to_string(block_size_) + " bytes");
  }
  slots_[i] = Slot{true, id, std::move(data)};
}

std::uint32_t PlainBucket::real_count() const {
  std::uint32_t n = 0;
  for (const auto& s : slots_) n += s.real ? 1 : 0;
  return n;
}

std::vector<std::pair<BlockId, Bytes>> PlainBucket::real_blocks() const {
  std::vector<std::pair<BlockId, Bytes>> out;
  out.reserve(slots_.size());
  for (const auto& s : slots_) {
    if (s.real) out.emplace_back(s.id, s.data);
  }
  return out;
}

bool PlainBucket::operator==(const PlainBucket& other) const {
  if (slots_.size() != other.slots_.size() || block_size_ != other.block_size_) {
    return false;
  }
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i].real != other.slots_[i].real) return false;
    if (slots_[i].real &&
        (slots_[i].id != other.slots_[i].id || slots_[i].data != other.slots_[i].data)) {
      return false;
    }
  }
  return true;
}

}  // namespace pathoram
