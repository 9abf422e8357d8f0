#include "pathoram/stash.hpp"

#include <algorithm>
#include <bit>

#include "pathoram/errors.hpp"

namespace pathoram {

Stash::Stash(std::uint32_t leaf_count)
    : leaf_count_(leaf_count), fenwick_(static_cast<std::size_t>(leaf_count) + 1, 0) {}

const Bytes& Stash::data_of(BlockId id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw PreconditionError("block not in stash");
  return it->second.data;
}

Leaf Stash::leaf_of(BlockId id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw PreconditionError("block not in stash");
  return it->second.leaf;
}

void Stash::fenwick_add(Leaf leaf, std::int64_t delta) {
  for (std::uint32_t i = leaf + 1; i <= leaf_count_; i += i & (~i + 1)) {
    fenwick_[i] = static_cast<std::uint64_t>(static_cast<std::int64_t>(fenwick_[i]) + delta);
  }
}

std::uint64_t Stash::prefix_count(Leaf leaf_exclusive) const {
  std::uint64_t s = 0;
  for (std::uint32_t i = leaf_exclusive; i > 0; i -= i & (~i + 1)) s += fenwick_[i];
  return s;
}

void Stash::insert(BlockId id, Leaf leaf, Bytes data) {
  if (leaf >= leaf_count_) throw PreconditionError("leaf out of range");
  if (entries_.contains(id)) throw PreconditionError("duplicate stash entry");
  auto& vec = by_leaf_[leaf];
  entries_.emplace(id, Entry{leaf, static_cast<std::uint32_t>(vec.size()), std::move(data)});
  vec.push_back(id);
  fenwick_add(leaf, 1);
}

void Stash::update_data(BlockId id, Bytes data) {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw PreconditionError("block not in stash");
  it->second.data = std::move(data);
}

void Stash::detach(BlockId id, Entry& e) {
  auto& vec = by_leaf_[e.leaf];
  const std::uint32_t slot = e.slot;
  if (slot + 1 != vec.size()) {
    vec[slot] = vec.back();
    entries_.at(vec[slot]).slot = slot;
  }
  vec.pop_back();
  if (vec.empty()) by_leaf_.erase(e.leaf);
  fenwick_add(e.leaf, -1);
  (void)id;
}

void Stash::set_leaf(BlockId id, Leaf leaf) {
  if (leaf >= leaf_count_) throw PreconditionError("leaf out of range");
  auto it = entries_.find(id);
  if (it == entries_.end()) throw PreconditionError("block not in stash");
  if (it->second.leaf == leaf) return;
  detach(id, it->second);
  auto& vec = by_leaf_[leaf];
  it->second.leaf = leaf;
  it->second.slot = static_cast<std::uint32_t>(vec.size());
  vec.push_back(id);
  fenwick_add(leaf, 1);
}

void Stash::remove(BlockId id) {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw PreconditionError("block not in stash");
  detach(id, it->second);
  entries_.erase(it);
}

std::uint64_t Stash::count_in_range(Leaf lo, Leaf hi) const {
  if (lo > hi || hi > leaf_count_) throw PreconditionError("bad leaf range");
  return prefix_count(hi) - prefix_count(lo);
}

BlockId Stash::select_in_range(Leaf lo, Leaf hi, std::uint64_t rank) const {
  const std::uint64_t global_rank = prefix_count(lo) + rank;
  // Fenwick descent: find the leaf holding the (global_rank+1)-th entry.
  std::uint64_t remaining = global_rank + 1;
  std::uint32_t pos = 0;
  std::uint32_t step = std::bit_floor(leaf_count_);
  for (; step > 0; step >>= 1) {
    const std::uint32_t next = pos + step;
    if (next <= leaf_count_ && fenwick_[next] < remaining) {
      pos = next;
      remaining -= fenwick_[pos];
    }
  }
  const Leaf leaf = pos;  // pos leaves are fully covered by the prefix
  if (leaf >= hi) throw PreconditionError("rank out of range");
  return by_leaf_.at(leaf)[remaining - 1];
}

std::vector<BlockId> Stash::ids_in_range(Leaf lo, Leaf hi) const {
  std::vector<BlockId> out;
  const std::uint64_t n = count_in_range(lo, hi);
  out.reserve(n);
  for (std::uint64_t k = 0; k < n; ++k) out.push_back(select_in_range(lo, hi, k));
  return out;
}

std::vector<BlockId> Stash::ids_sorted() const {
  std::vector<BlockId> out;
  out.reserve(entries_.size());
  for (const auto& [id, e] : entries_) out.push_back(id);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace pathoram
