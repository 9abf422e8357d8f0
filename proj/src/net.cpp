#include "pathoram/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <cstring>

#include "pathoram/errors.hpp"

namespace pathoram {

using wire::ErrorCode;
using wire::Frame;
using wire::Opcode;

namespace {

void read_exact(int fd, std::uint8_t* buf, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, buf + got, n - got, 0);
    if (r == 0) throw TransportError("connection closed by peer");
    if (r < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("recv failed: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(r);
  }
}

void write_all(int fd, const std::uint8_t* buf, std::size_t n) {
  std::size_t sent = 0;
  while (sent < n) {
    const ssize_t r = ::send(fd, buf + sent, n - sent, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("send failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(r);
  }
}

Frame read_frame(int fd, std::size_t max_size) {
  std::uint8_t head[4];
  read_exact(fd, head, 4);
  const std::uint32_t len = wire::get_u32_be(head);
  if (len < 1 || len > max_size) {
    throw FramingError("frame length " + std::to_string(len) + " outside limits");
  }
  Frame f;
  f.payload.resize(len - 1);
  std::uint8_t op;
  read_exact(fd, &op, 1);
  f.opcode = static_cast<Opcode>(op);
  if (!f.payload.empty()) read_exact(fd, f.payload.data(), f.payload.size());
  return f;
}

int dial(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0) {
    throw TransportError("cannot resolve " + host);
  }
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) {
    throw TransportError("cannot connect to " + host + ":" + service);
  }
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return fd;
}

[[noreturn]] void throw_from_error_frame(std::span<const std::uint8_t> payload) {
  auto [code, message] = wire::decode_error(payload);
  switch (code) {
    case ErrorCode::kHandshakeMismatch:
      throw HandshakeError(message);
    case ErrorCode::kFraming:
      throw FramingError(message);
    case ErrorCode::kAddressing:
      throw AddressingError(message);
    case ErrorCode::kIo:
      throw TransportError("server i/o error: " + message);
    case ErrorCode::kDebugDisabled:
      throw UsageError(message);
    case ErrorCode::kProtocol:
    default:
      throw FramingError("protocol error: " + message);
  }
}

}  // namespace

// --- RemoteStore -------------------------------------------------------------

RemoteStore::RemoteStore(const std::string& host, std::uint16_t port,
                         const TreeGeometry& expected, bool integrity)
    : host_(host), port_(port), geometry_(expected), integrity_(integrity) {
  connect_and_handshake();
}

RemoteStore::~RemoteStore() { close_socket(); }

void RemoteStore::close_socket() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void RemoteStore::fail(const std::string& what) {
  broken_ = true;
  close_socket();
  throw TransportError(what);
}

void RemoteStore::connect_and_handshake() {
  close_socket();
  fd_ = dial(host_, port_);
  broken_ = false;
  const wire::HelloBody mine = wire::HelloBody::from(geometry_, integrity_);
  Frame reply;
  try {
    send_frame(Opcode::kHello, wire::encode_hello(mine));
    reply = recv_frame();
  } catch (const TransportError& e) {
    fail(std::string("handshake failed: ") + e.what());
  } catch (const FramingError& e) {
    fail(std::string("handshake failed: ") + e.what());
  }
  if (reply.opcode == Opcode::kError) {
    broken_ = true;
    close_socket();
    throw_from_error_frame(reply.payload);
  }
  wire::HelloBody theirs;
  try {
    if (reply.opcode != Opcode::kOk) throw FramingError("unexpected opcode in HELLO reply");
    theirs = wire::decode_hello(reply.payload);
  } catch (const FramingError& e) {
    broken_ = true;
    close_socket();
    throw HandshakeError(e.what());
  }
  const std::string field = mine.mismatch_against(theirs);
  if (!field.empty()) {
    broken_ = true;
    close_socket();
    throw HandshakeError("server parameter mismatch: " + field);
  }
}

void RemoteStore::reconnect() { connect_and_handshake(); }

void RemoteStore::send_frame(Opcode opcode, std::span<const std::uint8_t> payload) {
  const Bytes frame = wire::encode_frame(opcode, payload);
  if (tap_) tap_(true, frame);
  write_all(fd_, frame.data(), frame.size());
}

Frame RemoteStore::recv_frame() {
  Frame f = read_frame(fd_, wire::max_frame_size(geometry_));
  if (tap_) {
    Bytes raw = wire::encode_frame(f.opcode, f.payload);
    tap_(false, raw);
  }
  return f;
}

Frame RemoteStore::request(Opcode opcode, std::span<const std::uint8_t> payload) {
  if (broken_ || fd_ < 0) {
    throw TransportError("connection is down; reconnect() before further requests");
  }
  Frame reply;
  try {
    send_frame(opcode, payload);
    reply = recv_frame();
  } catch (const TransportError& e) {
    fail(e.what());
  } catch (const FramingError& e) {
    fail(std::string("response stream corrupted: ") + e.what());
  }
  if (reply.opcode == Opcode::kError) throw_from_error_frame(reply.payload);
  if (reply.opcode != Opcode::kOk) {
    fail("unexpected response opcode");
  }
  return reply;
}

PathRead RemoteStore::read_buckets(std::span<const BucketIndex> indices) {
  store_detail::check_path(geometry_, indices, store_detail::PathOrder::kRootToLeaf);
  const Leaf leaf = leaf_of_bucket(geometry_, indices.back());
  std::uint8_t body[4];
  wire::put_u32_be(body, leaf);
  const Frame reply = request(Opcode::kReadPath, body);

  const std::size_t rec = record_size();
  const std::size_t n_records = geometry_.height + 1;
  const std::size_t n_digests = integrity_ ? geometry_.height : 0;
  if (reply.payload.size() != n_records * rec + n_digests * kDigestSize) {
    fail("READ_PATH response has wrong size");
  }
  PathRead out;
  out.records.reserve(n_records);
  const std::uint8_t* p = reply.payload.data();
  for (std::size_t i = 0; i < n_records; ++i, p += rec) {
    out.records.emplace_back(p, p + rec);
  }
  out.siblings.resize(n_digests);
  for (std::size_t i = 0; i < n_digests; ++i, p += kDigestSize) {
    std::memcpy(out.siblings[i].data(), p, kDigestSize);
  }
  return out;
}

void RemoteStore::write_buckets(std::span<const BucketIndex> indices,
                                std::span<const Bytes> records) {
  store_detail::check_path(geometry_, indices, store_detail::PathOrder::kLeafToRoot);
  store_detail::check_records(record_size(), indices, records);
  const Leaf leaf = leaf_of_bucket(geometry_, indices.front());
  Bytes body(4 + records.size() * record_size());
  wire::put_u32_be(body.data(), leaf);
  std::uint8_t* p = body.data() + 4;
  for (const Bytes& r : records) {
    std::memcpy(p, r.data(), r.size());
    p += r.size();
  }
  request(Opcode::kWritePath, body);
}

std::vector<Bytes> RemoteStore::debug_snapshot() {
  const Frame reply = request(Opcode::kSnapshotDebug, {});
  const std::size_t rec = record_size();
  if (reply.payload.size() != static_cast<std::size_t>(geometry_.bucket_count) * rec) {
    fail("SNAPSHOT_DEBUG response has wrong size");
  }
  std::vector<Bytes> out;
  out.reserve(geometry_.bucket_count);
  const std::uint8_t* p = reply.payload.data();
  for (BucketIndex i = 0; i < geometry_.bucket_count; ++i, p += rec) {
    out.emplace_back(p, p + rec);
  }
  return out;
}

void RemoteStore::debug_overwrite(BucketIndex, std::span<const std::uint8_t>) {
  throw UsageError("raw overwrite is not part of the wire protocol");
}

// --- OramServer --------------------------------------------------------------

OramServer::Options::Options() {
  const char* env = std::getenv("PATHORAM_DEBUG_SNAPSHOT");
  allow_debug_snapshot = env != nullptr && std::string(env) == "1";
}

OramServer::OramServer(BucketStore& store, const std::string& host, std::uint16_t port,
                       const Options& options)
    : store_(store), options_(options) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res) !=
      0) {
    throw TransportError("cannot resolve listen address " + host);
  }
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    listen_fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (listen_fd_ < 0) continue;
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(listen_fd_, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  ::freeaddrinfo(res);
  if (listen_fd_ < 0) {
    throw TransportError("cannot bind to " + host + ":" + service);
  }
  if (::listen(listen_fd_, 1) != 0) {
    ::close(listen_fd_);
    throw TransportError("listen failed");
  }
  sockaddr_storage addr{};
  socklen_t addr_len = sizeof addr;
  if (::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &addr_len) == 0) {
    if (addr.ss_family == AF_INET) {
      port_ = ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
    } else if (addr.ss_family == AF_INET6) {
      port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
    }
  }
}

OramServer::~OramServer() {
  stop();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void OramServer::stop() {
  stopping_.store(true);
  if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
  const int conn = conn_fd_.exchange(-1);
  if (conn >= 0) ::shutdown(conn, SHUT_RDWR);
}

void OramServer::serve() {
  while (!stopping_.load()) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (stopping_.load()) break;
      if (errno == EINTR) continue;
      break;
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    conn_fd_.store(fd);
    serve_connection(fd);
    const int cur = conn_fd_.exchange(-1);
    if (cur >= 0) ::close(cur);
  }
}

void OramServer::serve_connection(int fd) {
  bool hello_done = false;
  const std::size_t max_in =
      std::max<std::size_t>(wire::max_frame_size(store_.geometry()), 4096);
  try {
    while (!stopping_.load()) {
      Frame frame;
      try {
        frame = read_frame(fd, max_in);
      } catch (const TransportError&) {
        return;  // client went away
      } catch (const FramingError& e) {
        // Unparseable stream; report once and drop the connection.
        const Bytes out = wire::encode_frame(
            Opcode::kError, wire::encode_error(ErrorCode::kFraming, e.what()));
        write_all(fd, out.data(), out.size());
        return;
      }
      if (!handle_frame(fd, frame, hello_done)) return;
    }
  } catch (const TransportError&) {
    // response write failed; drop the connection
  }
}

bool OramServer::handle_frame(int fd, const Frame& frame, bool& hello_done) {
  auto respond = [&](Opcode op, std::span<const std::uint8_t> payload) {
    const Bytes out = wire::encode_frame(op, payload);
    write_all(fd, out.data(), out.size());
  };
  auto respond_error = [&](ErrorCode code, const std::string& message) {
    const Bytes out = wire::encode_frame(Opcode::kError, wire::encode_error(code, message));
    write_all(fd, out.data(), out.size());
  };

  if (!hello_done) {
    if (frame.opcode != Opcode::kHello) {
      respond_error(ErrorCode::kProtocol, "expected HELLO");
      return false;
    }
    wire::HelloBody theirs;
    try {
      theirs = wire::decode_hello(frame.payload);
    } catch (const FramingError& e) {
      respond_error(ErrorCode::kFraming, e.what());
      return false;
    }
    const wire::HelloBody mine =
        wire::HelloBody::from(store_.geometry(), store_.integrity_enabled());
    const std::string field = mine.mismatch_against(theirs);
    if (!field.empty()) {
      respond_error(ErrorCode::kHandshakeMismatch, "parameter mismatch: " + field);
      return false;
    }
    respond(Opcode::kOk, wire::encode_hello(mine));
    hello_done = true;
    return true;
  }

  const TreeGeometry& g = store_.geometry();
  const std::size_t rec = store_.record_size();
  try {
    switch (frame.opcode) {
      case Opcode::kReadPath: {
        if (frame.payload.size() != 4) {
          respond_error(ErrorCode::kFraming, "READ_PATH expects a 4-byte leaf");
          return false;
        }
        const Leaf leaf = wire::get_u32_be(frame.payload.data());
        if (leaf >= g.leaf_count) {
          respond_error(ErrorCode::kAddressing, "leaf out of range");
          return true;
        }
        const std::vector<BucketIndex> indices = path_indices(g, leaf);
        const PathRead result = store_.read_buckets(indices);
        Bytes payload(result.records.size() * rec + result.siblings.size() * kDigestSize);
        std::uint8_t* p = payload.data();
        for (const Bytes& r : result.records) {
          std::memcpy(p, r.data(), r.size());
          p += r.size();
        }
        for (const Digest& d : result.siblings) {
          std::memcpy(p, d.data(), d.size());
          p += d.size();
        }
        respond(Opcode::kOk, payload);
        return true;
      }
      case Opcode::kWritePath: {
        const std::size_t expect = 4 + static_cast<std::size_t>(g.height + 1) * rec;
        if (frame.payload.size() != expect) {
          respond_error(ErrorCode::kFraming, "WRITE_PATH payload has wrong size");
          return true;
        }
        const Leaf leaf = wire::get_u32_be(frame.payload.data());
        if (leaf >= g.leaf_count) {
          respond_error(ErrorCode::kAddressing, "leaf out of range");
          return true;
        }
        std::vector<BucketIndex> indices = path_indices(g, leaf);
        std::reverse(indices.begin(), indices.end());  // apply leaf-to-root
        std::vector<Bytes> records;
        records.reserve(indices.size());
        const std::uint8_t* p = frame.payload.data() + 4;
        for (std::size_t i = 0; i < indices.size(); ++i, p += rec) {
          records.emplace_back(p, p + rec);
        }
        store_.write_buckets(indices, records);
        respond(Opcode::kOk, {});
        return true;
      }
      case Opcode::kSnapshotDebug: {
        if (!options_.allow_debug_snapshot || !store_.debug_enabled()) {
          respond_error(ErrorCode::kDebugDisabled, "debug snapshot disabled");
          return true;
        }
        const std::vector<Bytes> snapshot = store_.debug_snapshot();
        Bytes payload(snapshot.size() * rec);
        std::uint8_t* p = payload.data();
        for (const Bytes& r : snapshot) {
          std::memcpy(p, r.data(), r.size());
          p += r.size();
        }
        respond(Opcode::kOk, payload);
        return true;
      }
      case Opcode::kHello:
        respond_error(ErrorCode::kProtocol, "duplicate HELLO");
        return false;
      default:
        respond_error(ErrorCode::kProtocol, "unknown opcode");
        return false;
    }
  } catch (const FramingError& e) {
    respond_error(ErrorCode::kFraming, e.what());
    return true;
  } catch (const AddressingError& e) {
    respond_error(ErrorCode::kAddressing, e.what());
    return true;
  } catch (const UsageError& e) {
    respond_error(ErrorCode::kDebugDisabled, e.what());
    return true;
  } catch (const Error& e) {
    respond_error(ErrorCode::kIo, e.what());
    return true;
  }
}

}  // namespace pathoram
