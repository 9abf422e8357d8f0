#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <map>
#include <memory>
#include <thread>

#include "pathoram/client.hpp"
#include "pathoram/errors.hpp"
#include "pathoram/net.hpp"
#include "pathoram/store.hpp"

using namespace pathoram;

namespace {

Key test_key(std::uint8_t fill = 0x44) {
  Key k;
  k.fill(fill);
  return k;
}

// In-process daemon over a memory store, listening on an ephemeral port.
struct TestServer {
  TreeGeometry geometry;
  MemoryStore store;
  OramServer server;
  std::thread thread;

  explicit TestServer(const TreeGeometry& g, bool integrity, bool allow_debug = true)
      : geometry(g),
        store(g, integrity, true),
        server(store, "127.0.0.1", 0, make_options(allow_debug)) {
    thread = std::thread([this] { server.serve(); });
  }
  ~TestServer() {
    server.stop();
    thread.join();
  }
  static OramServer::Options make_options(bool allow_debug) {
    OramServer::Options o;
    o.allow_debug_snapshot = allow_debug;
    return o;
  }
};

Bytes frame_record(const TreeGeometry& g, std::uint8_t fill) {
  return Bytes(sealed_record_size(g.slots_per_bucket, g.block_size), fill);
}

}  // namespace

TEST_CASE("wire frame encode/decode") {
  wire::HelloBody body = wire::HelloBody::from(make_geometry(256, 64, 4, 8), true);
  const Bytes payload = wire::encode_hello(body);
  const wire::HelloBody back = wire::decode_hello(payload);
  CHECK(body.mismatch_against(back).empty());

  SUBCASE("mismatch names the first differing field") {
    wire::HelloBody other = body;
    other.block_size += 1;
    CHECK(body.mismatch_against(other) == "block_size");
    other = body;
    other.integrity ^= 1;
    CHECK(body.mismatch_against(other) == "integrity");
  }
  SUBCASE("hello payload must be exact") {
    Bytes truncated(payload.begin(), payload.end() - 1);
    CHECK_THROWS_AS(wire::decode_hello(truncated), FramingError);
  }
  SUBCASE("error frames round-trip") {
    const Bytes e = wire::encode_error(wire::ErrorCode::kAddressing, "nope");
    const auto [code, message] = wire::decode_error(e);
    CHECK(code == wire::ErrorCode::kAddressing);
    CHECK(message == "nope");
  }
}

TEST_CASE("handshake accepts matching parameters and rejects mismatches") {
  const TreeGeometry g = make_geometry(64, 16, 4, 6);
  TestServer server(g, true);

  SUBCASE("match") {
    RemoteStore remote("127.0.0.1", server.server.port(), g, true);
    CHECK(remote.geometry() == g);
  }
  SUBCASE("block size mismatch names the field") {
    TreeGeometry wrong = make_geometry(64, 32, 4, 6);
    try {
      RemoteStore remote("127.0.0.1", server.server.port(), wrong, true);
      FAIL("handshake should have failed");
    } catch (const HandshakeError& e) {
      CHECK(std::string(e.what()).find("block_size") != std::string::npos);
    }
  }
  SUBCASE("integrity mismatch") {
    CHECK_THROWS_AS(RemoteStore("127.0.0.1", server.server.port(), g, false),
                    HandshakeError);
  }
  SUBCASE("nothing listens") {
    CHECK_THROWS_AS(RemoteStore("127.0.0.1", 1, g, true), TransportError);
  }
}

TEST_CASE("remote reads and writes mirror the local store") {
  const TreeGeometry g = make_geometry(64, 16, 4, 6);
  TestServer server(g, true);
  RemoteStore remote("127.0.0.1", server.server.port(), g, true);

  SeededRandom rng(31);
  auto path_down = path_indices(g, 9);
  std::vector<BucketIndex> path_up(path_down.rbegin(), path_down.rend());
  std::vector<Bytes> records;
  for (std::uint32_t i = 0; i <= g.height; ++i) {
    Bytes r(remote.record_size());
    rng.fill(r);
    records.push_back(std::move(r));
  }
  remote.write_buckets(path_up, records);

  SUBCASE("response carries exactly L+1 records plus L digests") {
    const PathRead r = remote.read_buckets(path_down);
    CHECK(r.records.size() == g.height + 1);
    CHECK(r.siblings.size() == g.height);
  }
  SUBCASE("remote and local reads return identical payload bytes") {
    const PathRead a = remote.read_buckets(path_down);
    const PathRead b = server.store.read_buckets(path_down);
    CHECK(a.records == b.records);
    CHECK(a.siblings == b.siblings);
  }
  SUBCASE("write/read round-trip across the wire") {
    const PathRead r = remote.read_buckets(path_down);
    for (std::size_t level = 0; level < r.records.size(); ++level) {
      CHECK(r.records[level] == records[g.height - level]);
    }
  }
  SUBCASE("snapshot over the wire equals the local snapshot") {
    CHECK(remote.debug_snapshot() == server.store.debug_snapshot());
  }
  SUBCASE("oversized record is rejected with no server mutation") {
    const auto before = server.store.debug_snapshot();
    auto bad = records;
    bad[0].push_back(0);
    CHECK_THROWS_AS(remote.write_buckets(path_up, bad), FramingError);
    CHECK(server.store.debug_snapshot() == before);
  }
  SUBCASE("raw overwrite has no wire equivalent") {
    CHECK_THROWS_AS(remote.debug_overwrite(0, frame_record(g, 0)), UsageError);
  }
}

TEST_CASE("server survives malformed frames") {
  const TreeGeometry g = make_geometry(16, 8, 2, 3);
  TestServer server(g, false);

  // Raw socket speaking garbage: an absurd length prefix.
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(fd >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(server.server.port());
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  const std::uint8_t junk[8] = {0xFF, 0xFF, 0xFF, 0xFF, 1, 2, 3, 4};
  REQUIRE(::send(fd, junk, sizeof junk, MSG_NOSIGNAL) == sizeof junk);
  std::uint8_t reply[64];
  const ssize_t n = ::recv(fd, reply, sizeof reply, 0);
  CHECK(n > 0);  // an ERROR frame, then the server drops the connection
  ::close(fd);

  // The daemon still serves the next, well-behaved client.
  RemoteStore remote("127.0.0.1", server.server.port(), g, false);
  CHECK_NOTHROW(remote.read_buckets(path_indices(g, 0)));
}

TEST_CASE("debug snapshot can be disabled server-side") {
  const TreeGeometry g = make_geometry(16, 8, 2, 3);
  TestServer server(g, false, /*allow_debug=*/false);
  RemoteStore remote("127.0.0.1", server.server.port(), g, false);
  CHECK_THROWS_AS(remote.debug_snapshot(), UsageError);
}

TEST_CASE("connection loss is fail-stop until reconnect") {
  const TreeGeometry g = make_geometry(16, 8, 2, 3);
  auto server = std::make_unique<TestServer>(g, false);
  const std::uint16_t port = server->server.port();
  RemoteStore remote("127.0.0.1", port, g, false);
  const auto path_down = path_indices(g, 0);
  CHECK_NOTHROW(remote.read_buckets(path_down));

  server.reset();  // daemon goes away mid-session
  CHECK_THROWS_AS(remote.read_buckets(path_down), TransportError);
  CHECK_THROWS_AS(remote.read_buckets(path_down), TransportError);  // still latched

  TestServer revived(g, false);
  RemoteStore fresh("127.0.0.1", revived.server.port(), g, false);
  CHECK_NOTHROW(fresh.read_buckets(path_down));

  SUBCASE("reconnect() restores service on the original transport") {
    // the original remote still points at the dead port; reconnect must fail
    CHECK_THROWS_AS(remote.reconnect(), TransportError);
  }
}

TEST_CASE("the wire never carries plaintext block data") {
  const TreeGeometry g = make_geometry(16, 64, 4, 4);
  TestServer server(g, false);
  RemoteStore remote("127.0.0.1", server.server.port(), g, false);

  Bytes captured;
  remote.set_wire_tap([&](bool, std::span<const std::uint8_t> frame) {
    captured.insert(captured.end(), frame.begin(), frame.end());
  });

  SeededRandom rng(32);
  OramClient client = OramClient::create(test_key(), remote, rng);

  // Distinctive plaintext marker, repeated across several blocks and accesses.
  Bytes marker(g.block_size);
  const char tag[] = "VERY-SECRET-MARKER-0123456789";
  for (std::size_t i = 0; i < marker.size(); ++i) {
    marker[i] = static_cast<std::uint8_t>(tag[i % (sizeof tag - 1)]);
  }
  for (BlockId id = 0; id < 8; ++id) client.write(id, marker);
  for (BlockId id = 0; id < 8; ++id) CHECK(client.read(id) == marker);

  REQUIRE(captured.size() > 1000);
  const auto it = std::search(captured.begin(), captured.end(), std::begin(tag),
                              std::end(tag) - 1);
  CHECK(it == captured.end());
}

TEST_CASE("end-to-end differential: remote file backend equals local memory") {
  const TreeGeometry g = make_geometry(64, 16, 4, 6);
  const Key key = test_key();

  // local run
  MemoryStore local(g, true, true);
  SeededRandom local_rng(77);
  OramClient local_client = OramClient::create(key, local, local_rng);

  // remote run over a file store behind the daemon
  const std::string path = "/tmp/pathoram_net_diff_" + std::to_string(::getpid()) + ".porams";
  std::filesystem::remove(path);
  auto file_store = FileStore::create(path, g, true, true);
  OramServer::Options opts;
  opts.allow_debug_snapshot = true;
  OramServer daemon(*file_store, "127.0.0.1", 0, opts);
  std::thread daemon_thread([&] { daemon.serve(); });

  {
    RemoteStore remote("127.0.0.1", daemon.port(), g, true);
    SeededRandom remote_rng(77);
    OramClient remote_client = OramClient::create(key, remote, remote_rng);

    SeededRandom workload(78);
    std::map<BlockId, Bytes> oracle;
    for (int i = 0; i < 1000; ++i) {
      const BlockId id = workload.uniform(g.capacity);
      if (workload.uniform(2) == 0) {
        Bytes data(g.block_size);
        workload.fill(data);
        local_client.write(id, data);
        remote_client.write(id, data);
        oracle[id] = data;
      } else {
        const Bytes a = local_client.read(id);
        const Bytes b = remote_client.read(id);
        REQUIRE(a == b);
        if (oracle.contains(id)) REQUIRE(a == oracle[id]);
      }
    }

    // identical final client state...
    CHECK(local_client.stash_ids() == remote_client.stash_ids());
    CHECK(local_client.merkle_root() == remote_client.merkle_root());
    for (BlockId id = 0; id < g.capacity; ++id) {
      CHECK(local_client.position_of(id) == remote_client.position_of(id));
    }
    // ...and identical final server state, byte for byte.
    CHECK(local.debug_snapshot() == remote.debug_snapshot());
  }

  daemon.stop();
  daemon_thread.join();
  std::filesystem::remove(path);
}
