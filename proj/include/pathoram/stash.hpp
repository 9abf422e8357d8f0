#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "pathoram/bucket.hpp"
#include "pathoram/geometry.hpp"

namespace pathoram {

/// Client-side overflow set of (BlockId, data) pairs awaiting eviction, each
/// tagged with the block's currently mapped leaf. A Fenwick tree over leaves
/// supports the eviction step's two queries — how many stash blocks map into a
/// leaf range, and "give me the k-th of them" — in O(log leaf_count), so
/// eviction cost does not degrade when a small bucket size lets the stash grow.
class Stash {
 public:
  explicit Stash(std::uint32_t leaf_count);

  std::size_t size() const { return entries_.size(); }
  bool contains(BlockId id) const { return entries_.contains(id); }
  const Bytes& data_of(BlockId id) const;
  Leaf leaf_of(BlockId id) const;

  /// Inserts a new entry; the id must not be present.
  void insert(BlockId id, Leaf leaf, Bytes data);
  void update_data(BlockId id, Bytes data);
  /// Retags an entry with a new mapped leaf (remap of an in-stash block).
  void set_leaf(BlockId id, Leaf leaf);
  void remove(BlockId id);

  /// Number of entries whose leaf lies in [lo, hi).
  std::uint64_t count_in_range(Leaf lo, Leaf hi) const;
  /// The rank-th entry (0-based, in leaf-then-insertion order) among those in
  /// [lo, hi); rank must be < count_in_range(lo, hi).
  BlockId select_in_range(Leaf lo, Leaf hi, std::uint64_t rank) const;
  /// All ids with leaf in [lo, hi); cheap only when the count is small.
  std::vector<BlockId> ids_in_range(Leaf lo, Leaf hi) const;

  /// Ids in ascending order (canonical order for serialization).
  std::vector<BlockId> ids_sorted() const;

 private:
  struct Entry {
    Leaf leaf;
    std::uint32_t slot;  // position within by_leaf_[leaf]
    Bytes data;
  };

  std::uint64_t prefix_count(Leaf leaf_exclusive) const;
  void fenwick_add(Leaf leaf, std::int64_t delta);
  void detach(BlockId id, Entry& e);

  std::uint32_t leaf_count_;
  std::unordered_map<BlockId, Entry> entries_;
  std::unordered_map<Leaf, std::vector<BlockId>> by_leaf_;
  std::vector<std::uint64_t> fenwick_;  // 1-based, size leaf_count_+1
};

}  // namespace pathoram
