// pathoram — experiment harness and storage daemon CLI.

#include <CLI11.hpp>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "pathoram/errors.hpp"
#include "pathoram/harness.hpp"
#include "pathoram/net.hpp"

using namespace pathoram;
using harness::BackendKind;
using harness::ExperimentConfig;

namespace {

OramServer* g_server = nullptr;

void handle_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

struct CommonFlags {
  std::uint64_t capacity = 1024;
  std::uint32_t block_size = 64;
  std::vector<std::uint32_t> bucket_slots{4};
  std::vector<std::uint32_t> heights{10};
  std::string workload = "uniform";
  std::uint64_t accesses = 100000;
  std::uint64_t seed = 1;
  std::string backend = "memory";
  std::string server_host = "127.0.0.1";
  std::uint16_t server_port = 0;
  std::string file_dir;
  bool integrity = false;
  std::string output;
  std::uint32_t threads = 1;

  void attach(CLI::App* app) {
    app->add_option("--n,--capacity", capacity, "number of logical blocks (N)");
    app->add_option("--block-size,-b", block_size, "block size in bytes (B)");
    app->add_option("--z,--bucket-slots", bucket_slots,
                    "bucket sizes to sweep (Z, repeatable)");
    app->add_option("--l,--height", heights, "tree heights to sweep (L, repeatable)");
    app->add_option("--workload", workload, "uniform|repeated-single|sequential");
    app->add_option("--accesses,-a", accesses, "accesses per cell");
    app->add_option("--seed", seed, "master seed");
    app->add_option("--backend", backend, "memory|file|remote");
    app->add_option("--server", server_host, "daemon host for the remote backend");
    app->add_option("--port", server_port, "daemon port for the remote backend");
    app->add_option("--file-dir", file_dir, "directory for file-backed stores");
    app->add_flag("--integrity", integrity, "enable the Merkle integrity layer");
    app->add_option("--out,-o", output, "output directory");
    app->add_option("--threads", threads, "parallel experiment cells");
  }

  ExperimentConfig to_config() const {
    ExperimentConfig config;
    config.capacity = capacity;
    config.block_size = block_size;
    config.bucket_slots = bucket_slots;
    config.heights = heights;
    config.workload = harness::workload_from_name(workload);
    config.access_count = accesses;
    config.seed = seed;
    config.backend = harness::backend_from_name(backend);
    config.remote_host = server_host;
    config.remote_port = server_port;
    config.file_dir = file_dir;
    config.integrity = integrity;
    config.output_dir = output;
    config.threads = threads;
    return config;
  }
};

int run_serve(const std::string& listen_host, std::uint16_t listen_port,
              const std::string& backend, const std::string& file_path, bool create,
              const CommonFlags& flags) {
  const bool debug = OramServer::Options().allow_debug_snapshot;
  std::unique_ptr<BucketStore> store;
  if (backend == "memory") {
    const TreeGeometry g = make_geometry(flags.capacity, flags.block_size,
                                         flags.bucket_slots.front(),
                                         flags.heights.front());
    store = std::make_unique<MemoryStore>(g, flags.integrity, debug);
  } else if (backend == "file") {
    if (file_path.empty()) throw UsageError("file backend needs --file <path>");
    if (create || !std::filesystem::exists(file_path)) {
      const TreeGeometry g = make_geometry(flags.capacity, flags.block_size,
                                           flags.bucket_slots.front(),
                                           flags.heights.front());
      store = FileStore::create(file_path, g, flags.integrity, debug);
    } else {
      store = FileStore::open(file_path, debug);
    }
  } else {
    throw UsageError("serve supports backend memory|file");
  }

  const TreeGeometry& g = store->geometry();
  OramServer server(*store, listen_host, listen_port);
  g_server = &server;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::printf("pathoram daemon: %s backend, N=%llu B=%u Z=%u L=%u integrity=%s\n",
              backend.c_str(), static_cast<unsigned long long>(g.capacity), g.block_size,
              g.slots_per_bucket, g.height, store->integrity_enabled() ? "on" : "off");
  std::printf("listening on %s:%u\n", listen_host.c_str(), server.port());
  std::fflush(stdout);
  server.serve();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Path ORAM client, storage daemon and experiment harness"};
  // Options load from a key=value file too: pathoram --config exp.conf <cmd>,
  // with keys in a [<cmd>] section (or dotted: "stash-sweep.n=1024").
  app.set_config("--config", "", "read options from a key=value config file");
  app.require_subcommand(1);

  CommonFlags flags;

  auto* sweep = app.add_subcommand(
      "stash-sweep", "measure post-access stash sizes over (Z, L) cells");
  flags.attach(sweep);

  auto* oblivious = app.add_subcommand(
      "oblivious-test", "chi-square battery over revealed-leaf distributions");
  flags.attach(oblivious);

  auto* plots = app.add_subcommand("plots", "emit plot series from a stash-sweep summary");
  std::string summary_csv;
  std::string plots_out = "plots";
  plots->add_option("--summary", summary_csv, "summary.csv from stash-sweep")->required();
  plots->add_option("--out,-o", plots_out, "output directory");

  auto* serve = app.add_subcommand("serve", "run the bucket-store daemon");
  std::string listen_host = "127.0.0.1";
  std::uint16_t listen_port = 9178;
  std::string serve_backend = "memory";
  std::string serve_file;
  bool serve_create = false;
  serve->add_option("--listen", listen_host, "listen address");
  serve->add_option("--listen-port", listen_port, "listen port (0 = ephemeral)");
  serve->add_option("--store", serve_backend, "memory|file");
  serve->add_option("--file", serve_file, "store file path (file backend)");
  serve->add_flag("--create", serve_create, "create a fresh store file");
  flags.attach(serve);

  auto* bench = app.add_subcommand("bench", "per-access latency and byte counts");
  flags.attach(bench);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep->parsed()) {
      ExperimentConfig config = flags.to_config();
      if (config.output_dir.empty()) config.output_dir = "stash-sweep-out";
      const auto traces = harness::run_stash_experiment(config);
      std::printf("%-4s %-4s %-10s %-10s %-12s %-8s\n", "Z", "L", "accesses", "max",
                  "mean", "p99.9");
      for (const auto& trace : traces) {
        const auto s = trace.summary();
        std::printf("%-4u %-4u %-10llu %-10u %-12.4f %-8u\n", s.bucket_slots, s.height,
                    static_cast<unsigned long long>(s.accesses), s.max, s.mean, s.p999);
      }
      std::printf("results written to %s\n", config.output_dir.c_str());
      return 0;
    }
    if (oblivious->parsed()) {
      const auto report = harness::run_obliviousness_test(flags.to_config());
      std::fputs(report.to_string().c_str(), stdout);
      return report.pass ? 0 : 1;
    }
    if (plots->parsed()) {
      harness::emit_plots(summary_csv, plots_out);
      std::printf("plot data written to %s\n", plots_out.c_str());
      return 0;
    }
    if (serve->parsed()) {
      return run_serve(listen_host, listen_port, serve_backend, serve_file, serve_create,
                       flags);
    }
    if (bench->parsed()) {
      const auto report = harness::run_bench(flags.to_config());
      std::fputs(report.to_string().c_str(), stdout);
      return 0;
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
