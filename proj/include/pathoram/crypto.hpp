#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>

#include "pathoram/bucket.hpp"
#include "pathoram/geometry.hpp"
#include "pathoram/random.hpp"

namespace pathoram {

inline constexpr std::size_t kKeySize = 32;    // AES-256-GCM
inline constexpr std::size_t kNonceSize = 12;
inline constexpr std::size_t kTagSize = 16;
inline constexpr std::size_t kDigestSize = 32; // SHA-256

using Key = std::array<std::uint8_t, kKeySize>;
using Digest = std::array<std::uint8_t, kDigestSize>;

/// Size of a sealed bucket record: nonce || ciphertext || tag. Constant for
/// fixed (Z, B), independent of bucket contents.
inline std::size_t sealed_record_size(std::uint32_t slots, std::uint32_t block_size) {
  return kNonceSize + plain_bucket_size(slots, block_size) + kTagSize;
}

/// Seals buckets into fixed-size randomized ciphertexts and opens them back.
/// Every seal draws a fresh nonce and dummy filler from the supplied
/// randomness source, so two seals of the same bucket never collide.
class BucketCipher {
 public:
  BucketCipher(const Key& key, std::uint32_t slots, std::uint32_t block_size);
  ~BucketCipher();
  BucketCipher(BucketCipher&&) noexcept;
  BucketCipher& operator=(BucketCipher&&) noexcept;
  BucketCipher(const BucketCipher&) = delete;
  BucketCipher& operator=(const BucketCipher&) = delete;

  std::size_t record_size() const { return sealed_record_size(slots_, block_size_); }

  Bytes seal(const PlainBucket& bucket, RandomSource& rng) const;

  /// Authenticates before releasing any plaintext; throws IntegrityError on a
  /// bad tag (tamper, wrong key) or FramingError on a wrong-size record.
  PlainBucket open(std::span<const std::uint8_t> record) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::uint32_t slots_;
  std::uint32_t block_size_;
};

Digest sha256(std::span<const std::uint8_t> data);

// Merkle digest rule over sealed records. Leaves and internal nodes are
// domain-separated by a one-byte prefix.
Digest merkle_leaf_digest(std::span<const std::uint8_t> record);
Digest merkle_node_digest(std::span<const std::uint8_t> record, const Digest& left,
                          const Digest& right);

/// Recomputes the root digest from a path's sealed records (root-to-leaf
/// order) plus the off-path sibling digests for levels 1..L (sibling_digests[l-1]
/// is the digest of the sibling of the path's level-l bucket). Used both to
/// verify a read-back against the stored root and to derive the new root after
/// a write-back.
Digest merkle_path_root(const TreeGeometry& g, Leaf leaf,
                        std::span<const Bytes> path_records,
                        std::span<const Digest> sibling_digests);

/// Client-held Merkle state: the single root digest.
class MerkleState {
 public:
  MerkleState() : root_{} {}
  explicit MerkleState(const Digest& root) : root_(root) {}

  const Digest& root() const { return root_; }
  void set_root(const Digest& root) { root_ = root; }

  /// Throws IntegrityError naming the path if the recomputed root differs.
  void verify_path(const TreeGeometry& g, Leaf leaf, std::span<const Bytes> path_records,
                   std::span<const Digest> sibling_digests) const;

  /// Replaces the root with the one recomputed from the new path ciphertexts.
  /// Only call after verify_path succeeded within the same access.
  void update_path(const TreeGeometry& g, Leaf leaf, std::span<const Bytes> new_records,
                   std::span<const Digest> sibling_digests);

 private:
  Digest root_;
};

}  // namespace pathoram
