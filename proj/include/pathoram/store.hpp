#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pathoram/crypto.hpp"
#include "pathoram/geometry.hpp"

namespace pathoram {

struct PathRead {
  std::vector<Bytes> records;      // one sealed record per requested index
  std::vector<Digest> siblings;    // L off-path digests when integrity is on
};

/// The untrusted server: 2^(L+1)-1 addressable fixed-size sealed-bucket slots,
/// plus per-node Merkle digests when integrity is enabled. The store never
/// sees plaintext, keys, the position map, or the stash.
///
/// I/O unit is one path: read_buckets takes root-to-leaf indices, write_buckets
/// leaf-to-root, and both apply in request order. Debug hooks (full snapshot,
/// raw overwrite for fault injection) exist only on instances constructed with
/// debug enabled.
class BucketStore {
 public:
  virtual ~BucketStore() = default;

  virtual const TreeGeometry& geometry() const = 0;
  virtual bool integrity_enabled() const = 0;
  std::size_t record_size() const {
    return sealed_record_size(geometry().slots_per_bucket, geometry().block_size);
  }

  virtual PathRead read_buckets(std::span<const BucketIndex> indices) = 0;
  virtual void write_buckets(std::span<const BucketIndex> indices,
                             std::span<const Bytes> records) = 0;

  virtual bool debug_enabled() const = 0;
  virtual std::vector<Bytes> debug_snapshot() = 0;
  virtual void debug_overwrite(BucketIndex index, std::span<const std::uint8_t> record) = 0;
};

/// In-memory backend.
class MemoryStore final : public BucketStore {
 public:
  MemoryStore(const TreeGeometry& g, bool integrity, bool debug = false);

  const TreeGeometry& geometry() const override { return geometry_; }
  bool integrity_enabled() const override { return integrity_; }
  PathRead read_buckets(std::span<const BucketIndex> indices) override;
  void write_buckets(std::span<const BucketIndex> indices,
                     std::span<const Bytes> records) override;
  bool debug_enabled() const override { return debug_; }
  std::vector<Bytes> debug_snapshot() override;
  void debug_overwrite(BucketIndex index, std::span<const std::uint8_t> record) override;

 private:
  TreeGeometry geometry_;
  bool integrity_;
  bool debug_;
  std::vector<Bytes> buckets_;
  std::vector<Digest> digests_;

  friend class FileStore;
  static void update_path_digests(const TreeGeometry& g,
                                  const std::function<const Bytes&(BucketIndex)>& record_at,
                                  std::span<const BucketIndex> leaf_to_root,
                                  std::vector<Digest>& digests);
};

/// File-backed backend: fixed header, then bucket_count fixed-size records,
/// then (when integrity is on) a parallel digest region. O(1) seek per bucket.
class FileStore final : public BucketStore {
 public:
  /// Creates a new store file (fails if the file already exists).
  static std::unique_ptr<FileStore> create(const std::string& path, const TreeGeometry& g,
                                           bool integrity, bool debug = false);
  /// Opens an existing store file; geometry comes from the header.
  static std::unique_ptr<FileStore> open(const std::string& path, bool debug = false);

  const TreeGeometry& geometry() const override { return geometry_; }
  bool integrity_enabled() const override { return integrity_; }
  PathRead read_buckets(std::span<const BucketIndex> indices) override;
  void write_buckets(std::span<const BucketIndex> indices,
                     std::span<const Bytes> records) override;
  bool debug_enabled() const override { return debug_; }
  std::vector<Bytes> debug_snapshot() override;
  void debug_overwrite(BucketIndex index, std::span<const std::uint8_t> record) override;

 private:
  FileStore(std::fstream file, const TreeGeometry& g, bool integrity, bool debug);

  Bytes read_record(BucketIndex index);
  void write_record(BucketIndex index, std::span<const std::uint8_t> record);
  Digest read_digest(BucketIndex index);
  void write_digest(BucketIndex index, const Digest& d);
  std::uint64_t record_offset(BucketIndex index) const;
  std::uint64_t digest_offset(BucketIndex index) const;

  std::fstream file_;
  TreeGeometry geometry_;
  bool integrity_;
  bool debug_;
};

/// Decorator counting bucket-granularity I/O and recording the revealed leaf
/// of every path read/write. Used by tests and the harness.
class InstrumentedStore final : public BucketStore {
 public:
  explicit InstrumentedStore(BucketStore& inner) : inner_(inner) {}

  const TreeGeometry& geometry() const override { return inner_.geometry(); }
  bool integrity_enabled() const override { return inner_.integrity_enabled(); }
  PathRead read_buckets(std::span<const BucketIndex> indices) override;
  void write_buckets(std::span<const BucketIndex> indices,
                     std::span<const Bytes> records) override;
  bool debug_enabled() const override { return inner_.debug_enabled(); }
  std::vector<Bytes> debug_snapshot() override { return inner_.debug_snapshot(); }
  void debug_overwrite(BucketIndex index, std::span<const std::uint8_t> record) override {
    inner_.debug_overwrite(index, record);
  }

  std::uint64_t bucket_reads() const { return bucket_reads_; }
  std::uint64_t bucket_writes() const { return bucket_writes_; }
  std::uint64_t bytes_read() const { return bytes_read_; }
  std::uint64_t bytes_written() const { return bytes_written_; }
  const std::vector<Leaf>& read_leaves() const { return read_leaves_; }
  const std::vector<Leaf>& write_leaves() const { return write_leaves_; }
  const std::vector<std::vector<BucketIndex>>& read_index_log() const {
    return read_index_log_;
  }
  const std::vector<std::vector<BucketIndex>>& write_index_log() const {
    return write_index_log_;
  }
  void reset_counters();

 private:
  BucketStore& inner_;
  std::uint64_t bucket_reads_ = 0;
  std::uint64_t bucket_writes_ = 0;
  std::uint64_t bytes_read_ = 0;
  std::uint64_t bytes_written_ = 0;
  std::vector<Leaf> read_leaves_;
  std::vector<Leaf> write_leaves_;
  std::vector<std::vector<BucketIndex>> read_index_log_;
  std::vector<std::vector<BucketIndex>> write_index_log_;
};

// Shared path/record validation for store implementations.
namespace store_detail {
enum class PathOrder { kRootToLeaf, kLeafToRoot };
void check_path(const TreeGeometry& g, std::span<const BucketIndex> indices,
                PathOrder order);
void check_records(std::size_t record_size, std::span<const BucketIndex> indices,
                   std::span<const Bytes> records);
}  // namespace store_detail

}  // namespace pathoram
