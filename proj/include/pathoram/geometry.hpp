#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace pathoram {

using BlockId = std::uint64_t;
using Leaf = std::uint32_t;
using BucketIndex = std::uint32_t;

/// Static shape of one ORAM instance: a complete binary tree of height L with
/// 2^L leaves, each node a bucket of `slots_per_bucket` block slots, holding up
/// to `capacity` logical blocks of `block_size` bytes. Buckets are addressed in
/// level-order (heap) layout with the root at index 0, so path arithmetic is
/// closed-form.
struct TreeGeometry {
  std::uint32_t height = 0;           // L, levels are 0 (root) .. L (leaves)
  std::uint32_t leaf_count = 0;       // 2^L
  std::uint32_t bucket_count = 0;     // 2^(L+1) - 1
  std::uint64_t capacity = 0;         // N, valid block ids are [0, N)
  std::uint32_t slots_per_bucket = 0; // Z
  std::uint32_t block_size = 0;       // B bytes per block

  bool operator==(const TreeGeometry&) const = default;
};

inline constexpr std::uint32_t kMaxHeight = 26;

/// Builds a geometry, deriving leaf/bucket counts. Default height is
/// max(1, ceil(log2(capacity))).
TreeGeometry make_geometry(std::uint64_t capacity, std::uint32_t block_size,
                           std::uint32_t slots_per_bucket,
                           std::optional<std::uint32_t> height = std::nullopt);

/// Index of the level-`level` bucket on the root-to-leaf-p path:
/// (2^level - 1) + floor(p / 2^(L - level)).
BucketIndex path_bucket_index(const TreeGeometry& g, Leaf p, std::uint32_t level);

/// The L+1 bucket indices from the root (position 0) down to leaf p.
std::vector<BucketIndex> path_indices(const TreeGeometry& g, Leaf p);

/// Whether the paths to leaves a and b go through the same bucket at `level`,
/// i.e. a and b agree on their top `level` bits. This is the eviction
/// eligibility predicate.
bool same_path_at_level(const TreeGeometry& g, Leaf a, Leaf b, std::uint32_t level);

// Heap-layout arithmetic. parent/sibling require index > 0.
inline std::uint32_t level_of(BucketIndex i) {
  std::uint32_t level = 0;
  while (i > 0) {
    i = (i - 1) / 2;
    ++level;
  }
  return level;
}
inline BucketIndex parent_of(BucketIndex i) { return (i - 1) / 2; }
inline BucketIndex sibling_of(BucketIndex i) { return ((i - 1) ^ 1u) + 1; }
inline BucketIndex left_child_of(BucketIndex i) { return 2 * i + 1; }
inline BucketIndex right_child_of(BucketIndex i) { return 2 * i + 2; }
inline bool is_left_child(BucketIndex i) { return i % 2 == 1; }

inline bool is_leaf_bucket(const TreeGeometry& g, BucketIndex i) {
  return i >= g.leaf_count - 1;
}
inline Leaf leaf_of_bucket(const TreeGeometry& g, BucketIndex i) {
  return static_cast<Leaf>(i - (g.leaf_count - 1));
}

/// True if `indices` is exactly the root-to-leaf path of some leaf.
bool is_root_to_leaf_path(const TreeGeometry& g, const std::vector<BucketIndex>& indices);

}  // namespace pathoram
