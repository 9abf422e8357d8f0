#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "pathoram/store.hpp"
#include "pathoram/wire.hpp"

namespace pathoram {

/// Client-side transport: a BucketStore whose reads and writes travel as
/// READ_PATH / WRITE_PATH frames to a daemon. The wire carries only the leaf
/// index, sealed records and digests. Errors are fail-stop for the instance:
/// after a transport error the store refuses further requests until
/// reconnect() has re-run the handshake.
class RemoteStore final : public BucketStore {
 public:
  /// Connects and performs the HELLO exchange; the server's parameters must
  /// match `expected` exactly.
  RemoteStore(const std::string& host, std::uint16_t port, const TreeGeometry& expected,
              bool integrity);
  ~RemoteStore() override;

  const TreeGeometry& geometry() const override { return geometry_; }
  bool integrity_enabled() const override { return integrity_; }
  PathRead read_buckets(std::span<const BucketIndex> indices) override;
  void write_buckets(std::span<const BucketIndex> indices,
                     std::span<const Bytes> records) override;

  // Snapshots work over the wire when the daemon allows them; raw overwrites
  // are a local-only fault-injection hook with no protocol equivalent.
  bool debug_enabled() const override { return true; }
  std::vector<Bytes> debug_snapshot() override;
  void debug_overwrite(BucketIndex index, std::span<const std::uint8_t> record) override;

  void reconnect();

  /// Test hook: observes every raw frame moving in either direction.
  using WireTap = std::function<void(bool outgoing, std::span<const std::uint8_t>)>;
  void set_wire_tap(WireTap tap) { tap_ = std::move(tap); }

 private:
  void connect_and_handshake();
  void send_frame(wire::Opcode opcode, std::span<const std::uint8_t> payload);
  wire::Frame recv_frame();
  wire::Frame request(wire::Opcode opcode, std::span<const std::uint8_t> payload);
  void close_socket();
  [[noreturn]] void fail(const std::string& what);

  std::string host_;
  std::uint16_t port_;
  TreeGeometry geometry_;
  bool integrity_;
  int fd_ = -1;
  bool broken_ = false;
  WireTap tap_;
};

/// Server daemon: wraps one local BucketStore and serves connections one at a
/// time (the protocol is strict request/response for a single client).
class OramServer {
 public:
  struct Options {
    /// Gates SNAPSHOT_DEBUG. Defaults to the PATHORAM_DEBUG_SNAPSHOT=1
    /// environment switch so release deployments keep it off.
    bool allow_debug_snapshot;
    Options();
  };

  /// Binds and listens; port 0 picks an ephemeral port (see port()).
  OramServer(BucketStore& store, const std::string& host, std::uint16_t port,
             const Options& options = {});
  ~OramServer();

  std::uint16_t port() const { return port_; }

  /// Accept loop; returns after stop(). Serves connections sequentially.
  void serve();
  void stop();

 private:
  void serve_connection(int fd);
  bool handle_frame(int fd, const wire::Frame& frame, bool& hello_done);

  BucketStore& store_;
  Options options_;
  int listen_fd_ = -1;
  std::atomic<int> conn_fd_{-1};
  std::atomic<bool> stopping_{false};
  std::uint16_t port_ = 0;
};

}  // namespace pathoram
