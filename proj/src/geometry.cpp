#include "pathoram/geometry.hpp"

#include <bit>

#include "pathoram/errors.hpp"

namespace pathoram {

TreeGeometry make_geometry(std::uint64_t capacity, std::uint32_t block_size,
                           std::uint32_t slots_per_bucket,
                           std::optional<std::uint32_t> height) {
  if (capacity == 0) throw ConfigError("capacity must be >= 1");
  if (block_size == 0) throw ConfigError("block_size must be >= 1");
  if (slots_per_bucket == 0) throw ConfigError("slots_per_bucket must be >= 1");

  std::uint32_t h;
  if (height) {
    h = *height;
  } else {
    h = static_cast<std::uint32_t>(std::bit_width(capacity - 1));  // ceil(log2 N)
    if (h == 0) h = 1;
  }
  if (h < 1 || h > kMaxHeight) {
    throw ConfigError("height must be in [1, " + std::to_string(kMaxHeight) + "]");
  }

  TreeGeometry g;
  g.height = h;
  g.leaf_count = 1u << h;
  g.bucket_count = 2 * g.leaf_count - 1;
  g.capacity = capacity;
  g.slots_per_bucket = slots_per_bucket;
  g.block_size = block_size;
  return g;
}

BucketIndex path_bucket_index(const TreeGeometry& g, Leaf p, std::uint32_t level) {
  if (p >= g.leaf_count) throw PreconditionError("leaf out of range");
  if (level > g.height) throw PreconditionError("level out of range");
  return ((1u << level) - 1) + (p >> (g.height - level));
}

std::vector<BucketIndex> path_indices(const TreeGeometry& g, Leaf p) {
  if (p >= g.leaf_count) throw PreconditionError("leaf out of range");
  std::vector<BucketIndex> out(g.height + 1);
  for (std::uint32_t level = 0; level <= g.height; ++level) {
    out[level] = ((1u << level) - 1) + (p >> (g.height - level));
  }
  return out;
}

bool same_path_at_level(const TreeGeometry& g, Leaf a, Leaf b, std::uint32_t level) {
  if (a >= g.leaf_count || b >= g.leaf_count) throw PreconditionError("leaf out of range");
  if (level > g.height) throw PreconditionError("level out of range");
  return (a >> (g.height - level)) == (b >> (g.height - level));
}

bool is_root_to_leaf_path(const TreeGeometry& g, const std::vector<BucketIndex>& indices) {
  if (indices.size() != g.height + 1u) return false;
  if (indices[0] != 0) return false;
  for (std::size_t i = 1; i < indices.size(); ++i) {
    if (indices[i] >= g.bucket_count) return false;
    if (parent_of(indices[i]) != indices[i - 1]) return false;
  }
  return is_leaf_bucket(g, indices.back());
}

}  // namespace pathoram
