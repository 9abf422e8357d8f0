#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pathoram/crypto.hpp"
#include "pathoram/geometry.hpp"
#include "pathoram/random.hpp"
#include "pathoram/stash.hpp"
#include "pathoram/store.hpp"

namespace pathoram {

/// Client-side array of N leaf assignments; entries start out null (never
/// accessed) and change only inside an access.
class PositionMap {
 public:
  static constexpr std::uint32_t kNull = 0xFFFFFFFFu;

  explicit PositionMap(std::uint64_t capacity)
      : entries_(capacity, kNull) {}

  std::uint64_t size() const { return entries_.size(); }
  std::optional<Leaf> get(BlockId id) const {
    const std::uint32_t v = entries_[id];
    if (v == kNull) return std::nullopt;
    return static_cast<Leaf>(v);
  }
  void set(BlockId id, Leaf leaf) { entries_[id] = leaf; }
  const std::vector<std::uint32_t>& raw() const { return entries_; }
  std::vector<std::uint32_t>& raw() { return entries_; }

 private:
  std::vector<std::uint32_t> entries_;
};

struct AccessRequest {
  enum class Op { kRead, kWrite };
  Op op = Op::kRead;
  BlockId id = 0;
  std::optional<Bytes> data;  // required for writes, absent for reads

  static AccessRequest read(BlockId id) { return {Op::kRead, id, std::nullopt}; }
  static AccessRequest write(BlockId id, Bytes data) {
    return {Op::kWrite, id, std::move(data)};
  }
};

/// The trusted client engine. Each access remaps the block to a fresh uniform
/// leaf, reads the full path to its old leaf into the stash, applies the
/// update, and writes the path back leaf-to-root, refilling each bucket with
/// up to Z randomly chosen eligible stash blocks. Every access
/// performs exactly L+1 bucket reads and L+1 bucket writes, so the backend
/// observes nothing but a uniformly random leaf per access.
///
/// Not thread-safe: one access at a time; callers serialize externally.
struct ClientOptions {
  // Negative control for the obliviousness battery: blocks keep their first
  // assigned leaf forever. Never enable outside tests.
  bool disable_remap_for_testing = false;
};

class OramClient {
 public:

  /// Fresh instance: empty stash, all-null position map, and the whole tree
  /// initialized with sealed all-dummy buckets (written through the ordinary
  /// path interface so it works over any backend).
  static OramClient create(const Key& key, BucketStore& backend, RandomSource& rng,
                           const ClientOptions& options = ClientOptions());

  /// Resumes from a saved state file; geometry must match the backend.
  static OramClient resume(const Key& key, BucketStore& backend, RandomSource& rng,
                           const std::string& state_path, const ClientOptions& options = ClientOptions());

  /// Figure of merit: returns the block's data as it was before this access
  /// (for writes, the pre-update data; the caller already holds the new data).
  Bytes access(const AccessRequest& request);

  Bytes read(BlockId id) { return access(AccessRequest::read(id)); }
  Bytes write(BlockId id, Bytes data) {
    return access(AccessRequest::write(id, std::move(data)));
  }

  const TreeGeometry& geometry() const { return geometry_; }
  bool integrity_enabled() const { return integrity_; }
  std::size_t stash_size() const { return stash_.size(); }

  /// Persists position map, stash and Merkle root (versioned, bit-exact format).
  void save_state(const std::string& path) const;

  // Trusted-side introspection, used by invariant tests and the harness.
  std::optional<Leaf> position_of(BlockId id) const;
  std::vector<BlockId> stash_ids() const { return stash_.ids_sorted(); }
  const Digest& merkle_root() const { return merkle_.root(); }

  bool failed() const { return failed_; }
  /// Clears the fail-stop latch after external recovery (reconnect, repaired
  /// storage). The next access re-verifies whatever path it touches.
  void reset_failed_state() { failed_ = false; }

 private:
  OramClient(const Key& key, BucketStore& backend, RandomSource& rng,
             const ClientOptions& options);

  void initialize_tree();
  Bytes run_access(const AccessRequest& request);
  void merge_path_into_stash(const std::vector<Bytes>& records);
  std::vector<Bytes> evict_and_seal(Leaf p_read);

  TreeGeometry geometry_;
  BucketStore* backend_;
  RandomSource* rng_;
  BucketCipher cipher_;
  PositionMap position_map_;
  Stash stash_;
  MerkleState merkle_;
  bool integrity_;
  bool disable_remap_;
  bool failed_ = false;
};

}  // namespace pathoram
