#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "pathoram/errors.hpp"
#include "pathoram/store.hpp"

using namespace pathoram;

namespace {

Bytes record_of(const TreeGeometry& g, std::uint8_t fill) {
  return Bytes(sealed_record_size(g.slots_per_bucket, g.block_size), fill);
}

std::vector<BucketIndex> down(const TreeGeometry& g, Leaf p) { return path_indices(g, p); }
std::vector<BucketIndex> up(const TreeGeometry& g, Leaf p) {
  auto v = path_indices(g, p);
  return {v.rbegin(), v.rend()};
}

std::vector<Bytes> records_for(const TreeGeometry& g, std::size_t n, std::uint8_t base) {
  std::vector<Bytes> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(record_of(g, static_cast<std::uint8_t>(base + i)));
  }
  return out;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("pathoram_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace

TEST_CASE("memory store is a pure addressed byte array") {
  const TreeGeometry g = make_geometry(16, 8, 2, 2);
  MemoryStore store(g, false, true);

  const auto before = store.debug_snapshot();
  CHECK(before.size() == g.bucket_count);

  const auto writes = records_for(g, g.height + 1, 10);
  store.write_buckets(up(g, 0), writes);

  SUBCASE("read-after-write returns the exact bytes last written") {
    const PathRead r = store.read_buckets(down(g, 0));
    REQUIRE(r.records.size() == g.height + 1);
    for (std::size_t level = 0; level < r.records.size(); ++level) {
      CHECK(r.records[level] == writes[g.height - level]);
    }
    CHECK(r.siblings.empty());
  }

  SUBCASE("writing p=0's path leaves disjoint buckets untouched") {
    // For L=2, paths to p=0 and p=3 share only the root: {2, 6} untouched.
    const auto after = store.debug_snapshot();
    for (BucketIndex i : {2u, 6u}) CHECK(after[i] == before[i]);
    const PathRead r = store.read_buckets(down(g, 3));
    CHECK(r.records[1] == before[2]);
    CHECK(r.records[2] == before[6]);
    CHECK(r.records[0] == writes[2]);  // shared root got the new bytes
  }
}

TEST_CASE("store validates paths and record sizes before mutating") {
  const TreeGeometry g = make_geometry(16, 8, 2, 2);
  MemoryStore store(g, false, true);
  const auto before = store.debug_snapshot();

  SUBCASE("out-of-range index") {
    std::vector<BucketIndex> bad{0, 1, 99};
    CHECK_THROWS_AS(store.read_buckets(bad), AddressingError);
  }
  SUBCASE("not a path") {
    std::vector<BucketIndex> bad{0, 1, 6};
    CHECK_THROWS_AS(store.read_buckets(bad), AddressingError);
    std::vector<BucketIndex> wrong_len{0, 1};
    CHECK_THROWS_AS(store.read_buckets(wrong_len), AddressingError);
  }
  SUBCASE("wrong-size record rejected with no mutation") {
    auto records = records_for(g, g.height + 1, 20);
    records[1].pop_back();
    CHECK_THROWS_AS(store.write_buckets(up(g, 1), records), FramingError);
    CHECK(store.debug_snapshot() == before);
  }
  SUBCASE("count mismatch rejected") {
    auto records = records_for(g, g.height, 20);
    CHECK_THROWS_AS(store.write_buckets(up(g, 1), records), FramingError);
    CHECK(store.debug_snapshot() == before);
  }
  SUBCASE("write order must be leaf to root") {
    CHECK_THROWS_AS(store.write_buckets(down(g, 1), records_for(g, g.height + 1, 30)),
                    AddressingError);
  }
}

TEST_CASE("debug hooks are gated") {
  const TreeGeometry g = make_geometry(16, 8, 2, 2);
  MemoryStore closed(g, false, false);
  CHECK(!closed.debug_enabled());
  CHECK_THROWS_AS(closed.debug_snapshot(), UsageError);
  CHECK_THROWS_AS(closed.debug_overwrite(0, record_of(g, 1)), UsageError);

  MemoryStore open(g, false, true);
  CHECK(open.debug_enabled());
  CHECK(open.debug_snapshot().size() == g.bucket_count);
  CHECK_NOTHROW(open.debug_overwrite(0, record_of(g, 1)));
  CHECK(open.debug_snapshot()[0] == record_of(g, 1));
}

TEST_CASE("store maintains merkle digests that match a full rehash") {
  const TreeGeometry g = make_geometry(16, 8, 2, 3);
  MemoryStore store(g, true, true);

  // Digests are defined once a node has been written; cover every path the way
  // client initialization does, then overwrite a couple.
  for (Leaf p = 0; p < g.leaf_count; ++p) {
    store.write_buckets(up(g, p), records_for(g, g.height + 1, static_cast<std::uint8_t>(p)));
  }
  store.write_buckets(up(g, 5), records_for(g, g.height + 1, 40));
  store.write_buckets(up(g, 2), records_for(g, g.height + 1, 80));

  // Oracle digests recomputed from the snapshot.
  const auto snapshot = store.debug_snapshot();
  std::vector<Digest> oracle(g.bucket_count);
  for (BucketIndex i = g.bucket_count; i-- > 0;) {
    oracle[i] = is_leaf_bucket(g, i)
                    ? merkle_leaf_digest(snapshot[i])
                    : merkle_node_digest(snapshot[i], oracle[left_child_of(i)],
                                         oracle[right_child_of(i)]);
  }

  for (Leaf p = 0; p < g.leaf_count; ++p) {
    const auto indices = down(g, p);
    const PathRead r = store.read_buckets(indices);
    REQUIRE(r.siblings.size() == g.height);
    for (std::uint32_t level = 1; level <= g.height; ++level) {
      CHECK(r.siblings[level - 1] == oracle[sibling_of(indices[level])]);
    }
  }
}

TEST_CASE("file store round-trips across close and reopen") {
  const TreeGeometry g = make_geometry(16, 8, 2, 3);
  TempDir dir;
  const std::string path = dir.file("tree.porams");

  const auto writes = records_for(g, g.height + 1, 50);
  {
    auto store = FileStore::create(path, g, true, true);
    CHECK(store->geometry() == g);
    CHECK(store->integrity_enabled());
    store->write_buckets(up(g, 6), writes);
  }
  {
    auto store = FileStore::open(path, true);
    CHECK(store->geometry() == g);
    CHECK(store->integrity_enabled());
    const PathRead r = store->read_buckets(down(g, 6));
    for (std::size_t level = 0; level < r.records.size(); ++level) {
      CHECK(r.records[level] == writes[g.height - level]);
    }
    REQUIRE(r.siblings.size() == g.height);
  }

  SUBCASE("create refuses to clobber") {
    CHECK_THROWS_AS(FileStore::create(path, g, true, true), ConfigError);
  }
  SUBCASE("open rejects non-store files") {
    const std::string junk = dir.file("junk");
    std::ofstream(junk) << "not a store";
    CHECK_THROWS_AS(FileStore::open(junk), FramingError);
  }
}

TEST_CASE("file and memory stores behave identically") {
  const TreeGeometry g = make_geometry(16, 8, 2, 3);
  TempDir dir;
  MemoryStore mem(g, true, true);
  auto file = FileStore::create(dir.file("twin.porams"), g, true, true);

  SeededRandom rng(9);
  for (int round = 0; round < 30; ++round) {
    const Leaf p = static_cast<Leaf>(rng.uniform(g.leaf_count));
    std::vector<Bytes> records;
    for (std::uint32_t i = 0; i <= g.height; ++i) {
      Bytes r(sealed_record_size(g.slots_per_bucket, g.block_size));
      rng.fill(r);
      records.push_back(std::move(r));
    }
    mem.write_buckets(up(g, p), records);
    file->write_buckets(up(g, p), records);

    const Leaf q = static_cast<Leaf>(rng.uniform(g.leaf_count));
    const PathRead a = mem.read_buckets(down(g, q));
    const PathRead b = file->read_buckets(down(g, q));
    REQUIRE(a.records == b.records);
    REQUIRE(a.siblings == b.siblings);
  }
  CHECK(mem.debug_snapshot() == file->debug_snapshot());
}

TEST_CASE("instrumented store counts bucket-granularity i/o") {
  const TreeGeometry g = make_geometry(16, 8, 2, 3);
  MemoryStore inner(g, false, true);
  InstrumentedStore store(inner);

  store.read_buckets(down(g, 5));
  store.write_buckets(up(g, 5), records_for(g, g.height + 1, 1));
  CHECK(store.bucket_reads() == g.height + 1);
  CHECK(store.bucket_writes() == g.height + 1);
  CHECK(store.read_leaves() == std::vector<Leaf>{5});
  CHECK(store.write_leaves() == std::vector<Leaf>{5});
  CHECK(store.bytes_read() ==
        (g.height + 1) * sealed_record_size(g.slots_per_bucket, g.block_size));

  store.reset_counters();
  CHECK(store.bucket_reads() == 0);
  CHECK(store.read_leaves().empty());
}
