#include "pathoram/client.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "pathoram/errors.hpp"

namespace pathoram {

namespace {

constexpr char kStateMagic[8] = {'P', 'O', 'R', 'A', 'M', 'C', 'S', '1'};
constexpr std::uint32_t kStateVersion = 1;

void put_u32_le(std::uint8_t* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
std::uint32_t get_u32_le(const std::uint8_t* in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[i]) << (8 * i);
  return v;
}
void put_u64_le(std::uint8_t* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
std::uint64_t get_u64_le(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return v;
}

}  // namespace

OramClient::OramClient(const Key& key, BucketStore& backend, RandomSource& rng,
                       const ClientOptions& options)
    : geometry_(backend.geometry()),
      backend_(&backend),
      rng_(&rng),
      cipher_(key, geometry_.slots_per_bucket, geometry_.block_size),
      position_map_(geometry_.capacity),
      stash_(geometry_.leaf_count),
      integrity_(backend.integrity_enabled()),
      disable_remap_(options.disable_remap_for_testing) {}

OramClient OramClient::create(const Key& key, BucketStore& backend, RandomSource& rng,
                              const ClientOptions& options) {
  OramClient client(key, backend, rng, options);
  client.initialize_tree();
  return client;
}

void OramClient::initialize_tree() {
  // One sealed all-dummy record per bucket; interior buckets get rewritten
  // with the same bytes on overlapping paths, so the final server state is
  // exactly this array and the root digest can be derived from it locally.
  const PlainBucket dummy(geometry_.slots_per_bucket, geometry_.block_size);
  std::vector<Bytes> records(geometry_.bucket_count);
  for (BucketIndex i = 0; i < geometry_.bucket_count; ++i) {
    records[i] = cipher_.seal(dummy, *rng_);
  }
  std::vector<BucketIndex> leaf_to_root(geometry_.height + 1);
  std::vector<Bytes> path_records(geometry_.height + 1);
  for (Leaf p = 0; p < geometry_.leaf_count; ++p) {
    const std::vector<BucketIndex> indices = path_indices(geometry_, p);
    for (std::uint32_t level = 0; level <= geometry_.height; ++level) {
      const BucketIndex idx = indices[geometry_.height - level];
      leaf_to_root[level] = idx;
      path_records[level] = records[idx];
    }
    backend_->write_buckets(leaf_to_root, path_records);
  }
  if (integrity_) {
    std::vector<Digest> digests(geometry_.bucket_count);
    for (BucketIndex i = geometry_.bucket_count; i-- > 0;) {
      digests[i] = is_leaf_bucket(geometry_, i)
                       ? merkle_leaf_digest(records[i])
                       : merkle_node_digest(records[i], digests[left_child_of(i)],
                                            digests[right_child_of(i)]);
    }
    merkle_.set_root(digests[0]);
  }
}

std::optional<Leaf> OramClient::position_of(BlockId id) const {
  if (id >= geometry_.capacity) throw PreconditionError("block id out of range");
  return position_map_.get(id);
}

Bytes OramClient::access(const AccessRequest& request) {
  if (failed_) {
    throw UsageError("client is in failed state; recover the backend and reset first");
  }
  if (request.id >= geometry_.capacity) {
    throw PreconditionError("block id " + std::to_string(request.id) +
                            " out of range [0, " + std::to_string(geometry_.capacity) + ")");
  }
  if (request.op == AccessRequest::Op::kWrite) {
    if (!request.data || request.data->size() != geometry_.block_size) {
      throw PreconditionError("write requires exactly " +
                              std::to_string(geometry_.block_size) + " data bytes");
    }
  } else if (request.data) {
    throw PreconditionError("read request must not carry data");
  }
  // Request validation is done; any error past this point happened mid-access
  // and fail-stops the instance.
  try {
    return run_access(request);
  } catch (const Error&) {
    failed_ = true;
    throw;
  }
}

Bytes OramClient::run_access(const AccessRequest& request) {
  const BlockId id = request.id;
  const std::optional<Leaf> p_old = position_map_.get(id);

  // Remap before any I/O; the revealed leaf below is the *old* position.
  Leaf p_new;
  if (disable_remap_ && p_old) {
    p_new = *p_old;
  } else {
    p_new = sample_leaf(geometry_, *rng_);
  }
  position_map_.set(id, p_new);
  if (stash_.contains(id)) stash_.set_leaf(id, p_new);

  // Null rule: never-accessed blocks read an independently random path.
  const Leaf p_read = p_old ? *p_old : sample_leaf(geometry_, *rng_);

  const std::vector<BucketIndex> indices = path_indices(geometry_, p_read);
  PathRead read = backend_->read_buckets(indices);
  if (read.records.size() != indices.size() ||
      read.siblings.size() != (integrity_ ? geometry_.height : 0)) {
    throw CorruptionError("backend returned a malformed path response");
  }
  if (integrity_) {
    merkle_.verify_path(geometry_, p_read, read.records, read.siblings);
  }
  merge_path_into_stash(read.records);

  Bytes previous_data;
  if (stash_.contains(id)) {
    previous_data = stash_.data_of(id);
  } else if (!p_old) {
    previous_data.assign(geometry_.block_size, 0);
    stash_.insert(id, p_new, previous_data);  // materialize the zero block
  } else {
    throw CorruptionError("block " + std::to_string(id) +
                          " missing from its mapped path");
  }
  if (request.op == AccessRequest::Op::kWrite) {
    stash_.update_data(id, *request.data);
  }

  std::vector<Bytes> new_records = evict_and_seal(p_read);  // leaf-to-root

  std::vector<BucketIndex> write_indices(indices.rbegin(), indices.rend());
  backend_->write_buckets(write_indices, new_records);
  if (integrity_) {
    std::vector<Bytes> root_to_leaf(new_records.rbegin(), new_records.rend());
    merkle_.update_path(geometry_, p_read, root_to_leaf, read.siblings);
  }
  return previous_data;
}

void OramClient::merge_path_into_stash(const std::vector<Bytes>& records) {
  for (const Bytes& record : records) {
    const PlainBucket bucket = cipher_.open(record);
    for (auto& [block_id, data] : bucket.real_blocks()) {
      if (block_id >= geometry_.capacity) {
        throw CorruptionError("decrypted block id out of range");
      }
      if (stash_.contains(block_id)) {
        throw CorruptionError("block " + std::to_string(block_id) +
                              " present twice (path/stash)");
      }
      const std::optional<Leaf> pos = position_map_.get(block_id);
      if (!pos) {
        throw CorruptionError("tree holds a block the position map calls null");
      }
      stash_.insert(block_id, *pos, std::move(data));
    }
  }
}

std::vector<Bytes> OramClient::evict_and_seal(Leaf p_read) {
  std::vector<Bytes> sealed;
  sealed.reserve(geometry_.height + 1);
  for (std::uint32_t level = geometry_.height + 1; level-- > 0;) {
    // Blocks eligible for the level-`level` bucket of the read path are those
    // whose mapped leaf shares the path prefix, i.e. lies in one leaf range.
    const std::uint32_t span = geometry_.height - level;
    const Leaf lo = (p_read >> span) << span;
    const Leaf hi = lo + (1u << span);
    const std::uint64_t eligible = stash_.count_in_range(lo, hi);
    const std::uint32_t take = static_cast<std::uint32_t>(
        std::min<std::uint64_t>(eligible, geometry_.slots_per_bucket));

    PlainBucket bucket(geometry_.slots_per_bucket, geometry_.block_size);
    if (eligible <= geometry_.slots_per_bucket) {
      const std::vector<BlockId> ids = stash_.ids_in_range(lo, hi);
      for (std::uint32_t j = 0; j < take; ++j) {
        bucket.place(j, ids[j], stash_.data_of(ids[j]));
        stash_.remove(ids[j]);
      }
    } else {
      for (std::uint32_t j = 0; j < take; ++j) {
        const std::uint64_t rank = rng_->uniform(eligible - j);
        const BlockId chosen = stash_.select_in_range(lo, hi, rank);
        bucket.place(j, chosen, stash_.data_of(chosen));
        stash_.remove(chosen);
      }
    }
    sealed.push_back(cipher_.seal(bucket, *rng_));
  }
  return sealed;
}

void OramClient::save_state(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TransportError("cannot write state file: " + path);

  std::uint8_t header[64] = {};
  std::memcpy(header, kStateMagic, sizeof kStateMagic);
  put_u32_le(header + 8, kStateVersion);
  put_u32_le(header + 12, geometry_.height);
  put_u32_le(header + 16, geometry_.slots_per_bucket);
  put_u32_le(header + 20, geometry_.block_size);
  put_u64_le(header + 24, geometry_.capacity);
  header[32] = integrity_ ? 1 : 0;
  out.write(reinterpret_cast<const char*>(header), sizeof header);

  out.write(reinterpret_cast<const char*>(merkle_.root().data()), kDigestSize);

  std::vector<std::uint8_t> entry(4);
  for (std::uint32_t v : position_map_.raw()) {
    put_u32_le(entry.data(), v);
    out.write(reinterpret_cast<const char*>(entry.data()), 4);
  }

  const std::vector<BlockId> ids = stash_.ids_sorted();
  std::uint8_t count[8];
  put_u64_le(count, ids.size());
  out.write(reinterpret_cast<const char*>(count), 8);
  std::uint8_t idbuf[8];
  for (BlockId id : ids) {
    put_u64_le(idbuf, id);
    out.write(reinterpret_cast<const char*>(idbuf), 8);
    const Bytes& data = stash_.data_of(id);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
  }
  out.flush();
  if (!out) throw TransportError("short write to state file: " + path);
}

OramClient OramClient::resume(const Key& key, BucketStore& backend, RandomSource& rng,
                              const std::string& state_path, const ClientOptions& options) {
  std::ifstream in(state_path, std::ios::binary);
  if (!in) throw TransportError("cannot open state file: " + state_path);

  std::uint8_t header[64];
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in || std::memcmp(header, kStateMagic, sizeof kStateMagic) != 0) {
    throw FramingError("not a client state file: " + state_path);
  }
  if (get_u32_le(header + 8) != kStateVersion) {
    throw FramingError("unsupported client state version");
  }

  const TreeGeometry& g = backend.geometry();
  if (get_u32_le(header + 12) != g.height || get_u32_le(header + 16) != g.slots_per_bucket ||
      get_u32_le(header + 20) != g.block_size || get_u64_le(header + 24) != g.capacity ||
      (header[32] != 0) != backend.integrity_enabled()) {
    throw ConfigError("state file parameters do not match the backend");
  }

  OramClient client(key, backend, rng, options);

  Digest root;
  in.read(reinterpret_cast<char*>(root.data()), kDigestSize);
  client.merkle_.set_root(root);

  std::vector<std::uint8_t> buf(4);
  for (std::uint64_t i = 0; i < g.capacity; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()), 4);
    const std::uint32_t v = get_u32_le(buf.data());
    if (v != PositionMap::kNull && v >= g.leaf_count) {
      throw FramingError("state file holds an out-of-range leaf position");
    }
    client.position_map_.raw()[i] = v;
  }
  std::uint8_t count_buf[8];
  in.read(reinterpret_cast<char*>(count_buf), 8);
  if (!in) throw FramingError("truncated client state file");
  const std::uint64_t stash_count = get_u64_le(count_buf);
  for (std::uint64_t i = 0; i < stash_count; ++i) {
    std::uint8_t idbuf[8];
    in.read(reinterpret_cast<char*>(idbuf), 8);
    Bytes data(g.block_size);
    in.read(reinterpret_cast<char*>(data.data()), g.block_size);
    if (!in) throw FramingError("truncated client state file");
    const BlockId id = get_u64_le(idbuf);
    if (id >= g.capacity) throw FramingError("state file holds out-of-range block id");
    const std::optional<Leaf> pos = client.position_map_.get(id);
    if (!pos) throw FramingError("stash entry for a null-position block");
    client.stash_.insert(id, *pos, std::move(data));
  }
  return client;
}

}  // namespace pathoram
