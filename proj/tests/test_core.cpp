#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "pathoram/errors.hpp"
#include "pathoram/geometry.hpp"
#include "pathoram/random.hpp"

using namespace pathoram;

namespace {

// Independent oracle: walk the tree from the root, choosing left/right by the
// bits of p (most significant first), recording visited node indices.
std::vector<BucketIndex> traversal_oracle(std::uint32_t height, Leaf p) {
  std::vector<BucketIndex> out{0};
  BucketIndex node = 0;
  for (std::uint32_t level = 1; level <= height; ++level) {
    const std::uint32_t bit = (p >> (height - level)) & 1u;
    node = 2 * node + 1 + bit;
    out.push_back(node);
  }
  return out;
}

TreeGeometry geom(std::uint32_t height) { return make_geometry(16, 8, 4, height); }

}  // namespace

TEST_CASE("geometry construction") {
  const TreeGeometry g = make_geometry(1024, 64, 4, 10);
  CHECK(g.height == 10);
  CHECK(g.leaf_count == 1024);
  CHECK(g.bucket_count == 2047);
  CHECK(g.capacity == 1024);
  CHECK(g.slots_per_bucket == 4);
  CHECK(g.block_size == 64);

  SUBCASE("default height is ceil(log2(N)), at least 1") {
    CHECK(make_geometry(1024, 64, 4).height == 10);
    CHECK(make_geometry(1000, 64, 4).height == 10);
    CHECK(make_geometry(1025, 64, 4).height == 11);
    CHECK(make_geometry(1, 64, 4).height == 1);
    CHECK(make_geometry(2, 64, 4).height == 1);
    CHECK(make_geometry(3, 64, 4).height == 2);
  }
  SUBCASE("invalid parameters rejected") {
    CHECK_THROWS_AS(make_geometry(0, 64, 4), ConfigError);
    CHECK_THROWS_AS(make_geometry(16, 0, 4), ConfigError);
    CHECK_THROWS_AS(make_geometry(16, 64, 0), ConfigError);
    CHECK_THROWS_AS(make_geometry(16, 64, 4, 0u), ConfigError);
    CHECK_THROWS_AS(make_geometry(16, 64, 4, kMaxHeight + 1), ConfigError);
  }
}

TEST_CASE("path_bucket_index known values") {
  const TreeGeometry g3 = geom(3);
  CHECK(path_bucket_index(g3, 5, 0) == 0);   // root is always index 0
  CHECK(path_bucket_index(g3, 5, 3) == 12);  // leaf index = (2^3 - 1) + 5
  CHECK(path_bucket_index(g3, 5, 2) == 5);   // from the traversal oracle
  CHECK(traversal_oracle(3, 5)[2] == 5);
}

TEST_CASE("path known values") {
  CHECK(path_indices(geom(1), 0) == std::vector<BucketIndex>{0, 1});
  CHECK(path_indices(geom(2), 3) == std::vector<BucketIndex>{0, 2, 6});
  CHECK(traversal_oracle(2, 3) == std::vector<BucketIndex>{0, 2, 6});

  SUBCASE("opposite subtrees share exactly the root") {
    const auto a = path_indices(geom(3), 0);
    const auto b = path_indices(geom(3), 7);
    std::size_t common = 0;
    while (common < a.size() && a[common] == b[common]) ++common;
    CHECK(common == 1);
  }
}

TEST_CASE("closed-form indexing equals the traversal oracle for all L <= 8") {
  for (std::uint32_t height = 1; height <= 8; ++height) {
    const TreeGeometry g = geom(height);
    for (Leaf p = 0; p < g.leaf_count; ++p) {
      const auto oracle = traversal_oracle(height, p);
      const auto got = path_indices(g, p);
      REQUIRE(got == oracle);
      for (std::uint32_t level = 0; level <= height; ++level) {
        REQUIRE(path_bucket_index(g, p, level) == oracle[level]);
      }
    }
  }
}

TEST_CASE("path membership iff leading bits agree") {
  for (std::uint32_t height = 1; height <= 6; ++height) {
    const TreeGeometry g = geom(height);
    for (Leaf p = 0; p < g.leaf_count; ++p) {
      for (Leaf q = 0; q < g.leaf_count; ++q) {
        for (std::uint32_t level = 0; level <= height; ++level) {
          const bool same_bucket =
              path_bucket_index(g, p, level) == path_bucket_index(g, q, level);
          const bool same_bits = (p >> (height - level)) == (q >> (height - level));
          REQUIRE(same_bucket == same_bits);
          REQUIRE(same_path_at_level(g, p, q, level) == same_bucket);
        }
      }
    }
  }
}

TEST_CASE("every bucket lies on a path; leaf buckets on exactly one") {
  for (std::uint32_t height = 1; height <= 6; ++height) {
    const TreeGeometry g = geom(height);
    std::map<BucketIndex, std::uint32_t> cover;
    for (Leaf p = 0; p < g.leaf_count; ++p) {
      for (BucketIndex i : path_indices(g, p)) cover[i]++;
    }
    REQUIRE(cover.size() == g.bucket_count);
    for (const auto& [index, count] : cover) {
      REQUIRE(count >= 1);
      if (is_leaf_bucket(g, index)) REQUIRE(count == 1);
    }
  }
}

TEST_CASE("precondition violations") {
  const TreeGeometry g = geom(3);
  CHECK_THROWS_AS(path_bucket_index(g, 8, 0), PreconditionError);
  CHECK_THROWS_AS(path_bucket_index(g, 0, 4), PreconditionError);
  CHECK_THROWS_AS(path_indices(g, 8), PreconditionError);
  CHECK_THROWS_AS(same_path_at_level(g, 0, 8, 1), PreconditionError);
}

TEST_CASE("heap arithmetic") {
  CHECK(level_of(0) == 0);
  CHECK(level_of(1) == 1);
  CHECK(level_of(2) == 1);
  CHECK(level_of(12) == 3);
  CHECK(parent_of(12) == 5);
  CHECK(sibling_of(1) == 2);
  CHECK(sibling_of(2) == 1);
  CHECK(sibling_of(12) == 11);
  CHECK(left_child_of(5) == 11);
  CHECK(right_child_of(5) == 12);
  CHECK(is_left_child(11));
  CHECK(!is_left_child(12));

  const TreeGeometry g = geom(3);
  CHECK(is_root_to_leaf_path(g, {0, 2, 5, 12}));
  CHECK(!is_root_to_leaf_path(g, {0, 2, 5}));
  CHECK(!is_root_to_leaf_path(g, {0, 2, 6, 12}));
  CHECK(!is_root_to_leaf_path(g, {0, 2, 5, 11, 12}));
}

TEST_CASE("sample_leaf stays in range and is seed-reproducible") {
  const TreeGeometry g = geom(4);
  SeededRandom a(42), b(42), c(43);
  std::vector<Leaf> seq_a, seq_b, seq_c;
  std::set<Leaf> seen;
  for (int i = 0; i < 2000; ++i) {
    const Leaf la = sample_leaf(g, a);
    REQUIRE(la < g.leaf_count);
    seq_a.push_back(la);
    seq_b.push_back(sample_leaf(g, b));
    seq_c.push_back(sample_leaf(g, c));
    seen.insert(la);
  }
  CHECK(seq_a == seq_b);
  CHECK(seq_a != seq_c);
  CHECK(seen.size() == g.leaf_count);  // all 16 leaves hit over 2000 draws
}

TEST_CASE("uniform draw edge cases") {
  SeededRandom rng(7);
  CHECK(rng.uniform(1) == 0);  // single-leaf degenerate case
  for (int i = 0; i < 1000; ++i) {
    CHECK(rng.uniform(2) < 2);
  }
  CHECK_THROWS_AS(rng.uniform(0), PreconditionError);

  SUBCASE("system source produces distinct streams") {
    SystemRandom sys;
    std::vector<std::uint8_t> x(32), y(32);
    sys.fill(x);
    sys.fill(y);
    CHECK(x != y);
  }
}
