#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>

#include "pathoram/client.hpp"
#include "pathoram/errors.hpp"
#include "pathoram/net.hpp"
#include "pathoram/store.hpp"

namespace py = pybind11;
using namespace pathoram;

namespace {

Bytes to_bytes(const py::bytes& b) {
  const std::string s = b;
  return Bytes(s.begin(), s.end());
}

py::bytes from_bytes(const Bytes& b) {
  return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

/// Owns backend, randomness and client together so Python sees one object.
class Oram {
 public:
  Oram(std::uint64_t capacity, std::uint32_t block_size, std::uint32_t bucket_slots,
       std::optional<std::uint32_t> height, std::optional<py::bytes> key_bytes,
       bool integrity, std::optional<std::uint64_t> seed, const std::string& backend,
       const std::string& path, const std::string& host, std::uint16_t port,
       const std::string& resume_from) {
    const TreeGeometry geometry =
        make_geometry(capacity, block_size, bucket_slots, height);

    if (seed) {
      rng_ = std::make_unique<SeededRandom>(*seed);
    } else {
      rng_ = std::make_unique<SystemRandom>();
    }

    if (key_bytes) {
      const Bytes raw = to_bytes(*key_bytes);
      if (raw.size() != kKeySize) {
        throw PreconditionError("key must be exactly 32 bytes");
      }
      std::copy(raw.begin(), raw.end(), key_.begin());
    } else {
      SystemRandom key_rng;
      key_rng.fill(key_);
    }

    if (backend == "memory") {
      store_ = std::make_unique<MemoryStore>(geometry, integrity, true);
    } else if (backend == "file") {
      if (path.empty()) throw PreconditionError("file backend needs path=");
      if (resume_from.empty()) {
        store_ = FileStore::create(path, geometry, integrity, true);
      } else {
        store_ = FileStore::open(path, true);
      }
    } else if (backend == "remote") {
      store_ = std::make_unique<RemoteStore>(host, port, geometry, integrity);
    } else {
      throw PreconditionError("backend must be memory|file|remote");
    }

    if (resume_from.empty()) {
      client_.emplace(OramClient::create(key_, *store_, *rng_));
    } else {
      client_.emplace(OramClient::resume(key_, *store_, *rng_, resume_from));
    }
  }

  py::bytes read(BlockId id) { return from_bytes(client_->read(id)); }

  py::bytes write(BlockId id, const py::bytes& data) {
    return from_bytes(client_->write(id, to_bytes(data)));
  }

  std::size_t stash_size() const { return client_->stash_size(); }
  std::optional<Leaf> position_of(BlockId id) const { return client_->position_of(id); }
  void save_state(const std::string& path) const { client_->save_state(path); }

  std::uint32_t height() const { return client_->geometry().height; }
  std::uint32_t leaf_count() const { return client_->geometry().leaf_count; }
  std::uint64_t capacity() const { return client_->geometry().capacity; }
  std::uint32_t block_size() const { return client_->geometry().block_size; }
  std::uint32_t bucket_slots() const { return client_->geometry().slots_per_bucket; }
  bool integrity() const { return client_->integrity_enabled(); }

 private:
  Key key_{};
  std::unique_ptr<RandomSource> rng_;
  std::unique_ptr<BucketStore> store_;
  std::optional<OramClient> client_;
};

}  // namespace

PYBIND11_MODULE(_pathoram, m) {
  m.doc() = "Path ORAM: oblivious block storage over an untrusted bucket tree";

  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<IntegrityError>(m, "IntegrityError", PyExc_RuntimeError);
  py::register_exception<TransportError>(m, "TransportError", PyExc_ConnectionError);
  static py::exception<Error> base_error(m, "PathOramError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const PreconditionError&) {
      throw;  // handled by the registered exception above
    } catch (const IntegrityError&) {
      throw;
    } catch (const TransportError&) {
      throw;
    } catch (const Error& e) {
      py::set_error(base_error, e.what());
    }
  });

  m.def(
      "path_indices",
      [](std::uint32_t height, Leaf leaf) {
        const TreeGeometry g = make_geometry(1, 1, 1, height);
        return path_indices(g, leaf);
      },
      py::arg("height"), py::arg("leaf"),
      "Bucket indices (heap layout) on the root-to-leaf path");

  m.def("record_size", &sealed_record_size, py::arg("bucket_slots"),
        py::arg("block_size"), "Size in bytes of one sealed bucket record");

  py::class_<Oram>(m, "Oram")
      .def(py::init<std::uint64_t, std::uint32_t, std::uint32_t,
                    std::optional<std::uint32_t>, std::optional<py::bytes>, bool,
                    std::optional<std::uint64_t>, const std::string&, const std::string&,
                    const std::string&, std::uint16_t, const std::string&>(),
           py::arg("capacity"), py::arg("block_size"), py::arg("bucket_slots") = 4,
           py::arg("height") = std::nullopt, py::arg("key") = std::nullopt,
           py::arg("integrity") = true, py::arg("seed") = std::nullopt,
           py::arg("backend") = "memory", py::arg("path") = "",
           py::arg("host") = "127.0.0.1", py::arg("port") = 0,
           py::arg("resume_from") = "")
      .def("read", &Oram::read, py::arg("block_id"),
           "Returns the B-byte block (zeros if never written)")
      .def("write", &Oram::write, py::arg("block_id"), py::arg("data"),
           "Stores B bytes; returns the block's previous data")
      .def("save_state", &Oram::save_state, py::arg("path"))
      .def("position_of", &Oram::position_of, py::arg("block_id"))
      .def_property_readonly("stash_size", &Oram::stash_size)
      .def_property_readonly("height", &Oram::height)
      .def_property_readonly("leaf_count", &Oram::leaf_count)
      .def_property_readonly("capacity", &Oram::capacity)
      .def_property_readonly("block_size", &Oram::block_size)
      .def_property_readonly("bucket_slots", &Oram::bucket_slots)
      .def_property_readonly("integrity", &Oram::integrity);
}
