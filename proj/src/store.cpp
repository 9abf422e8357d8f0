#include "pathoram/store.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>

#include "pathoram/errors.hpp"

namespace pathoram {

namespace store_detail {

void check_path(const TreeGeometry& g, std::span<const BucketIndex> indices,
                PathOrder order) {
  if (indices.size() != g.height + 1u) {
    throw AddressingError("path must have exactly L+1 bucket indices");
  }
  for (BucketIndex i : indices) {
    if (i >= g.bucket_count) {
      throw AddressingError("bucket index " + std::to_string(i) + " out of range");
    }
  }
  const bool root_first = order == PathOrder::kRootToLeaf;
  if ((root_first ? indices.front() : indices.back()) != 0) {
    throw AddressingError("path does not contain the root bucket");
  }
  for (std::size_t i = 0; i + 1 < indices.size(); ++i) {
    const BucketIndex parent = root_first ? indices[i] : indices[i + 1];
    const BucketIndex child = root_first ? indices[i + 1] : indices[i];
    if (parent_of(child) != parent) {
      throw AddressingError("indices do not form a contiguous root-to-leaf path");
    }
  }
}

void check_records(std::size_t record_size, std::span<const BucketIndex> indices,
                   std::span<const Bytes> records) {
  if (records.size() != indices.size()) {
    throw FramingError("index/record count mismatch");
  }
  for (const Bytes& r : records) {
    if (r.size() != record_size) {
      throw FramingError("sealed record has wrong size: got " + std::to_string(r.size()) +
                         ", want " + std::to_string(record_size));
    }
  }
}

}  // namespace store_detail

using store_detail::PathOrder;

// Collects, for a root-to-leaf index list, the digests of the off-path
// siblings at levels 1..L.
static std::vector<Digest> collect_siblings(std::span<const BucketIndex> root_to_leaf,
                                            const std::function<Digest(BucketIndex)>& digest_at) {
  std::vector<Digest> out;
  out.reserve(root_to_leaf.size() - 1);
  for (std::size_t level = 1; level < root_to_leaf.size(); ++level) {
    out.push_back(digest_at(sibling_of(root_to_leaf[level])));
  }
  return out;
}

void MemoryStore::update_path_digests(
    const TreeGeometry& g, const std::function<const Bytes&(BucketIndex)>& record_at,
    std::span<const BucketIndex> leaf_to_root, std::vector<Digest>& digests) {
  for (BucketIndex i : leaf_to_root) {
    digests[i] = is_leaf_bucket(g, i)
                     ? merkle_leaf_digest(record_at(i))
                     : merkle_node_digest(record_at(i), digests[left_child_of(i)],
                                          digests[right_child_of(i)]);
  }
}

MemoryStore::MemoryStore(const TreeGeometry& g, bool integrity, bool debug)
    : geometry_(g), integrity_(integrity), debug_(debug),
      buckets_(g.bucket_count, Bytes(sealed_record_size(g.slots_per_bucket, g.block_size))) {
  if (integrity_) digests_.resize(g.bucket_count);
}

PathRead MemoryStore::read_buckets(std::span<const BucketIndex> indices) {
  store_detail::check_path(geometry_, indices, PathOrder::kRootToLeaf);
  PathRead out;
  out.records.reserve(indices.size());
  for (BucketIndex i : indices) out.records.push_back(buckets_[i]);
  if (integrity_) {
    out.siblings = collect_siblings(indices, [&](BucketIndex i) { return digests_[i]; });
  }
  return out;
}

void MemoryStore::write_buckets(std::span<const BucketIndex> indices,
                                std::span<const Bytes> records) {
  store_detail::check_path(geometry_, indices, PathOrder::kLeafToRoot);
  store_detail::check_records(record_size(), indices, records);
  for (std::size_t i = 0; i < indices.size(); ++i) buckets_[indices[i]] = records[i];
  if (integrity_) {
    update_path_digests(
        geometry_, [&](BucketIndex i) -> const Bytes& { return buckets_[i]; }, indices,
        digests_);
  }
}

std::vector<Bytes> MemoryStore::debug_snapshot() {
  if (!debug_) throw UsageError("debug hooks disabled on this store");
  return buckets_;
}

void MemoryStore::debug_overwrite(BucketIndex index, std::span<const std::uint8_t> record) {
  if (!debug_) throw UsageError("debug hooks disabled on this store");
  if (index >= geometry_.bucket_count) throw AddressingError("bucket index out of range");
  if (record.size() != record_size()) throw FramingError("wrong record size");
  buckets_[index].assign(record.begin(), record.end());
  // Fault injection bypasses digest maintenance on purpose: the server-side
  // digests keep describing the pre-tamper record, exactly like a server that
  // silently swaps bytes underneath its own bookkeeping.
}

// --- FileStore ---------------------------------------------------------------

namespace {

constexpr char kFileMagic[8] = {'P', 'O', 'R', 'A', 'M', 'S', 'T', '1'};
constexpr std::uint32_t kFileVersion = 1;
constexpr std::size_t kHeaderSize = 64;

void put_u32_le(std::uint8_t* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
std::uint32_t file_get_u32_le(const std::uint8_t* in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[i]) << (8 * i);
  return v;
}
void put_u64_le(std::uint8_t* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
std::uint64_t file_get_u64_le(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return v;
}

}  // namespace

FileStore::FileStore(std::fstream file, const TreeGeometry& g, bool integrity, bool debug)
    : file_(std::move(file)), geometry_(g), integrity_(integrity), debug_(debug) {}

std::unique_ptr<FileStore> FileStore::create(const std::string& path, const TreeGeometry& g,
                                             bool integrity, bool debug) {
  if (std::filesystem::exists(path)) {
    throw ConfigError("store file already exists: " + path);
  }
  {
    std::ofstream touch(path, std::ios::binary);
    if (!touch) throw TransportError("cannot create store file: " + path);
    std::uint8_t header[kHeaderSize] = {};
    std::memcpy(header, kFileMagic, sizeof kFileMagic);
    put_u32_le(header + 8, kFileVersion);
    put_u32_le(header + 12, g.height);
    put_u32_le(header + 16, g.slots_per_bucket);
    put_u32_le(header + 20, g.block_size);
    put_u64_le(header + 24, g.capacity);
    header[32] = integrity ? 1 : 0;
    touch.write(reinterpret_cast<const char*>(header), kHeaderSize);
    // Reserve the full bucket (and digest) region so record slots always exist.
    const std::size_t rec = sealed_record_size(g.slots_per_bucket, g.block_size);
    Bytes zeros(rec);
    for (std::uint32_t i = 0; i < g.bucket_count; ++i) {
      touch.write(reinterpret_cast<const char*>(zeros.data()), zeros.size());
    }
    if (integrity) {
      Bytes dz(kDigestSize);
      for (std::uint32_t i = 0; i < g.bucket_count; ++i) {
        touch.write(reinterpret_cast<const char*>(dz.data()), dz.size());
      }
    }
    if (!touch) throw TransportError("short write while creating store file");
  }
  std::fstream file(path, std::ios::binary | std::ios::in | std::ios::out);
  if (!file) throw TransportError("cannot reopen store file: " + path);
  return std::unique_ptr<FileStore>(new FileStore(std::move(file), g, integrity, debug));
}

std::unique_ptr<FileStore> FileStore::open(const std::string& path, bool debug) {
  std::fstream file(path, std::ios::binary | std::ios::in | std::ios::out);
  if (!file) throw TransportError("cannot open store file: " + path);
  std::uint8_t header[kHeaderSize];
  file.read(reinterpret_cast<char*>(header), kHeaderSize);
  if (!file || std::memcmp(header, kFileMagic, sizeof kFileMagic) != 0) {
    throw FramingError("not a bucket store file: " + path);
  }
  if (file_get_u32_le(header + 8) != kFileVersion) {
    throw FramingError("unsupported store file version");
  }
  TreeGeometry g = make_geometry(file_get_u64_le(header + 24), file_get_u32_le(header + 20),
                                 file_get_u32_le(header + 16), file_get_u32_le(header + 12));
  const bool integrity = header[32] != 0;
  return std::unique_ptr<FileStore>(new FileStore(std::move(file), g, integrity, debug));
}

std::uint64_t FileStore::record_offset(BucketIndex index) const {
  return kHeaderSize + static_cast<std::uint64_t>(index) * record_size();
}

std::uint64_t FileStore::digest_offset(BucketIndex index) const {
  return kHeaderSize + static_cast<std::uint64_t>(geometry_.bucket_count) * record_size() +
         static_cast<std::uint64_t>(index) * kDigestSize;
}

Bytes FileStore::read_record(BucketIndex index) {
  Bytes out(record_size());
  file_.seekg(static_cast<std::streamoff>(record_offset(index)));
  file_.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file_) throw TransportError("store file read failed");
  return out;
}

void FileStore::write_record(BucketIndex index, std::span<const std::uint8_t> record) {
  file_.seekp(static_cast<std::streamoff>(record_offset(index)));
  file_.write(reinterpret_cast<const char*>(record.data()),
              static_cast<std::streamsize>(record.size()));
  if (!file_) throw TransportError("store file write failed");
}

Digest FileStore::read_digest(BucketIndex index) {
  Digest d;
  file_.seekg(static_cast<std::streamoff>(digest_offset(index)));
  file_.read(reinterpret_cast<char*>(d.data()), kDigestSize);
  if (!file_) throw TransportError("store file read failed");
  return d;
}

void FileStore::write_digest(BucketIndex index, const Digest& d) {
  file_.seekp(static_cast<std::streamoff>(digest_offset(index)));
  file_.write(reinterpret_cast<const char*>(d.data()), kDigestSize);
  if (!file_) throw TransportError("store file write failed");
}

PathRead FileStore::read_buckets(std::span<const BucketIndex> indices) {
  store_detail::check_path(geometry_, indices, PathOrder::kRootToLeaf);
  PathRead out;
  out.records.reserve(indices.size());
  for (BucketIndex i : indices) out.records.push_back(read_record(i));
  if (integrity_) {
    out.siblings = collect_siblings(indices, [&](BucketIndex i) { return read_digest(i); });
  }
  return out;
}

void FileStore::write_buckets(std::span<const BucketIndex> indices,
                              std::span<const Bytes> records) {
  store_detail::check_path(geometry_, indices, PathOrder::kLeafToRoot);
  store_detail::check_records(record_size(), indices, records);
  for (std::size_t i = 0; i < indices.size(); ++i) write_record(indices[i], records[i]);
  if (integrity_) {
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const BucketIndex idx = indices[i];
      Digest d;
      if (is_leaf_bucket(geometry_, idx)) {
        d = merkle_leaf_digest(records[i]);
      } else {
        d = merkle_node_digest(records[i], read_digest(left_child_of(idx)),
                               read_digest(right_child_of(idx)));
      }
      write_digest(idx, d);
    }
  }
  file_.flush();
  if (!file_) throw TransportError("store file flush failed");
}

std::vector<Bytes> FileStore::debug_snapshot() {
  if (!debug_) throw UsageError("debug hooks disabled on this store");
  std::vector<Bytes> out;
  out.reserve(geometry_.bucket_count);
  for (BucketIndex i = 0; i < geometry_.bucket_count; ++i) out.push_back(read_record(i));
  return out;
}

void FileStore::debug_overwrite(BucketIndex index, std::span<const std::uint8_t> record) {
  if (!debug_) throw UsageError("debug hooks disabled on this store");
  if (index >= geometry_.bucket_count) throw AddressingError("bucket index out of range");
  if (record.size() != record_size()) throw FramingError("wrong record size");
  write_record(index, record);
  file_.flush();
}

// --- InstrumentedStore -------------------------------------------------------

PathRead InstrumentedStore::read_buckets(std::span<const BucketIndex> indices) {
  PathRead out = inner_.read_buckets(indices);
  bucket_reads_ += indices.size();
  for (const Bytes& r : out.records) bytes_read_ += r.size();
  bytes_read_ += out.siblings.size() * kDigestSize;
  read_index_log_.emplace_back(indices.begin(), indices.end());
  if (!indices.empty() && is_leaf_bucket(geometry(), indices.back())) {
    read_leaves_.push_back(leaf_of_bucket(geometry(), indices.back()));
  }
  return out;
}

void InstrumentedStore::write_buckets(std::span<const BucketIndex> indices,
                                      std::span<const Bytes> records) {
  inner_.write_buckets(indices, records);
  bucket_writes_ += indices.size();
  for (const Bytes& r : records) bytes_written_ += r.size();
  write_index_log_.emplace_back(indices.begin(), indices.end());
  if (!indices.empty() && is_leaf_bucket(geometry(), indices.front())) {
    write_leaves_.push_back(leaf_of_bucket(geometry(), indices.front()));
  }
}

void InstrumentedStore::reset_counters() {
  bucket_reads_ = bucket_writes_ = bytes_read_ = bytes_written_ = 0;
  read_leaves_.clear();
  write_leaves_.clear();
  read_index_log_.clear();
  write_index_log_.clear();
}

}  // namespace pathoram
