#include "pathoram/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "pathoram/errors.hpp"

namespace pathoram::harness {

namespace fs = std::filesystem;

WorkloadKind workload_from_name(const std::string& name) {
  if (name == "uniform") return WorkloadKind::kUniform;
  if (name == "repeated-single") return WorkloadKind::kRepeatedSingle;
  if (name == "sequential") return WorkloadKind::kSequential;
  throw UsageError("unknown workload: " + name +
                   " (expected uniform|repeated-single|sequential)");
}

const char* workload_name(WorkloadKind kind) {
  switch (kind) {
    case WorkloadKind::kUniform:
      return "uniform";
    case WorkloadKind::kRepeatedSingle:
      return "repeated-single";
    case WorkloadKind::kSequential:
      return "sequential";
  }
  return "?";
}

BackendKind backend_from_name(const std::string& name) {
  if (name == "memory") return BackendKind::kMemory;
  if (name == "file") return BackendKind::kFile;
  if (name == "remote") return BackendKind::kRemote;
  throw UsageError("unknown backend: " + name + " (expected memory|file|remote)");
}

void ExperimentConfig::validate() const {
  if (capacity == 0) throw UsageError("capacity must be >= 1");
  if (block_size == 0) throw UsageError("block-size must be >= 1");
  if (access_count == 0) throw UsageError("accesses must be >= 1");
  if (bucket_slots.empty()) throw UsageError("need at least one Z value");
  if (heights.empty()) throw UsageError("need at least one L value");
  for (std::uint32_t z : bucket_slots) {
    if (z == 0) throw UsageError("every Z must be >= 1");
  }
  for (std::uint32_t l : heights) {
    if (l < 1 || l > kMaxHeight) {
      throw UsageError("every L must be in [1, " + std::to_string(kMaxHeight) + "]");
    }
  }
  if (backend == BackendKind::kFile && file_dir.empty()) {
    throw UsageError("file backend needs --file-dir");
  }
  if (backend == BackendKind::kRemote && remote_port == 0) {
    throw UsageError("remote backend needs --server host and --port");
  }
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                          const char* role) {
  auto mix = [](std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  };
  std::uint64_t h = mix(master);
  h = mix(h ^ a);
  h = mix(h ^ b);
  for (const char* p = role; *p; ++p) h = mix(h ^ static_cast<std::uint8_t>(*p));
  return h;
}

WorkloadGenerator::WorkloadGenerator(WorkloadKind kind, std::uint64_t capacity,
                                     std::uint64_t seed)
    : kind_(kind), capacity_(capacity), rng_(seed) {}

WorkloadOp WorkloadGenerator::next() {
  WorkloadOp op;
  switch (kind_) {
    case WorkloadKind::kUniform:
      op.id = rng_.uniform(capacity_);
      op.is_write = rng_.uniform(2) == 0;
      break;
    case WorkloadKind::kRepeatedSingle:
      op.id = 0;
      op.is_write = index_ % 2 == 0;
      break;
    case WorkloadKind::kSequential:
      op.id = index_ % capacity_;
      op.is_write = (index_ / capacity_) % 2 == 0;  // alternate write/read sweeps
      break;
  }
  ++index_;
  return op;
}

Bytes WorkloadGenerator::next_data(std::uint32_t block_size) {
  Bytes data(block_size);
  rng_.fill(data);
  return data;
}

std::unique_ptr<BucketStore> make_backend(const ExperimentConfig& config,
                                          const TreeGeometry& geometry,
                                          const std::string& file_tag) {
  switch (config.backend) {
    case BackendKind::kMemory:
      return std::make_unique<MemoryStore>(geometry, config.integrity, true);
    case BackendKind::kFile: {
      fs::create_directories(config.file_dir);
      const std::string path = config.file_dir + "/" + file_tag + ".porams";
      fs::remove(path);  // each experiment cell starts from a fresh tree
      return FileStore::create(path, geometry, config.integrity, true);
    }
    case BackendKind::kRemote:
      return std::make_unique<RemoteStore>(config.remote_host, config.remote_port,
                                           geometry, config.integrity);
  }
  throw UsageError("unknown backend");
}

StashSummary StashTrace::summary() const {
  StashSummary s;
  s.bucket_slots = bucket_slots;
  s.height = height;
  s.accesses = sizes.size();
  if (sizes.empty()) return s;
  std::uint64_t total = 0;
  for (std::uint32_t v : sizes) {
    s.max = std::max(s.max, v);
    total += v;
  }
  s.mean = static_cast<double>(total) / static_cast<double>(sizes.size());
  std::vector<std::uint32_t> sorted(sizes);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t rank =
      (sorted.size() * 999 + 999) / 1000;  // ceil(0.999 * n), 1-based
  s.p999 = sorted[rank - 1];
  return s;
}

namespace {

Key derive_key(const ExperimentConfig& config, std::uint32_t z, std::uint32_t l) {
  SeededRandom rng(derive_seed(config.seed, z, l, "key"));
  Key key{};
  rng.fill(key);
  return key;
}

StashTrace run_stash_cell(const ExperimentConfig& config, std::uint32_t z,
                          std::uint32_t l) {
  const TreeGeometry geometry = make_geometry(config.capacity, config.block_size, z, l);
  const std::string tag = "stash_Z" + std::to_string(z) + "_L" + std::to_string(l);
  std::unique_ptr<BucketStore> backend = make_backend(config, geometry, tag);

  SeededRandom client_rng(derive_seed(config.seed, z, l, "client"));
  const Key key = derive_key(config, z, l);
  OramClient client = OramClient::create(key, *backend, client_rng);

  // The workload seed ignores Z so Z-sweeps at equal L replay the same
  // logical request sequence (paired runs).
  WorkloadGenerator workload(config.workload, config.capacity,
                             derive_seed(config.seed, 0, l, "workload"));
  StashTrace trace;
  trace.bucket_slots = z;
  trace.height = l;
  trace.sizes.reserve(config.access_count);
  for (std::uint64_t i = 0; i < config.access_count; ++i) {
    const WorkloadOp op = workload.next();
    if (op.is_write) {
      client.write(op.id, workload.next_data(config.block_size));
    } else {
      client.read(op.id);
    }
    trace.sizes.push_back(static_cast<std::uint32_t>(client.stash_size()));
  }
  return trace;
}

void append_summary_row(std::string& out, const StashSummary& s, std::uint64_t seed) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%u,%u,%llu,%u,%.6f,%u,%llu\n", s.bucket_slots, s.height,
                static_cast<unsigned long long>(s.accesses), s.max, s.mean, s.p999,
                static_cast<unsigned long long>(seed));
  out += buf;
}

constexpr const char* kSummaryHeader = "Z,L,accesses,max_stash,mean_stash,p999_stash,seed\n";

void write_stash_outputs(const ExperimentConfig& config,
                         const std::vector<StashTrace>& traces) {
  fs::create_directories(config.output_dir);

  std::ofstream trace_file(config.output_dir + "/trace.csv",
                           std::ios::binary | std::ios::trunc);
  trace_file << "Z,L,access_index,stash_size\n";
  char buf[96];
  for (const StashTrace& t : traces) {
    for (std::size_t i = 0; i < t.sizes.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%u,%u,%zu,%u\n", t.bucket_slots, t.height, i,
                    t.sizes[i]);
      trace_file << buf;
    }
  }
  trace_file.flush();
  if (!trace_file) throw TransportError("failed writing trace.csv");

  std::string combined(kSummaryHeader);
  for (const StashTrace& t : traces) {
    const StashSummary s = t.summary();
    append_summary_row(combined, s, config.seed);

    std::string cell(kSummaryHeader);
    append_summary_row(cell, s, config.seed);
    const std::string name = config.output_dir + "/summary_Z" +
                             std::to_string(t.bucket_slots) + "_L" +
                             std::to_string(t.height) + ".csv";
    std::ofstream cell_file(name, std::ios::binary | std::ios::trunc);
    cell_file << cell;
    if (!cell_file) throw TransportError("failed writing " + name);
  }
  std::ofstream summary_file(config.output_dir + "/summary.csv",
                             std::ios::binary | std::ios::trunc);
  summary_file << combined;
  if (!summary_file) throw TransportError("failed writing summary.csv");
}

void write_error_marker(const ExperimentConfig& config, const std::string& message) {
  if (config.output_dir.empty()) return;
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  std::ofstream marker(config.output_dir + "/error.marker",
                       std::ios::binary | std::ios::trunc);
  marker << message << "\n";
}

}  // namespace

std::vector<StashTrace> run_stash_experiment(const ExperimentConfig& config) {
  config.validate();

  struct Cell {
    std::uint32_t z, l;
  };
  std::vector<Cell> cells;
  for (std::uint32_t z : config.bucket_slots) {
    for (std::uint32_t l : config.heights) cells.push_back({z, l});
  }

  std::vector<StashTrace> traces(cells.size());
  std::vector<std::exception_ptr> failures(cells.size());

  // Remote cells share one connection-at-a-time daemon; keep them sequential.
  std::uint32_t worker_count = config.backend == BackendKind::kRemote ? 1 : config.threads;
  worker_count = std::max<std::uint32_t>(1, std::min<std::uint32_t>(
                                               worker_count,
                                               static_cast<std::uint32_t>(cells.size())));
  if (worker_count == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      try {
        traces[i] = run_stash_cell(config, cells[i].z, cells[i].l);
      } catch (...) {
        failures[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
        try {
          traces[i] = run_stash_cell(config, cells[i].z, cells[i].l);
        } catch (...) {
          failures[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(worker_count);
    for (std::uint32_t t = 0; t < worker_count; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (failures[i]) {
      // Flush whatever finished, mark the run as failed, then surface the error.
      std::vector<StashTrace> done;
      for (const StashTrace& t : traces) {
        if (!t.sizes.empty()) done.push_back(t);
      }
      std::string message = "cell Z=" + std::to_string(cells[i].z) +
                            " L=" + std::to_string(cells[i].l) + " failed";
      try {
        if (!config.output_dir.empty() && !done.empty()) {
          write_stash_outputs(config, done);
        }
        write_error_marker(config, message);
      } catch (...) {
      }
      std::rethrow_exception(failures[i]);
    }
  }

  if (!config.output_dir.empty()) write_stash_outputs(config, traces);
  return traces;
}

// --- obliviousness battery ---------------------------------------------------

namespace {

std::vector<std::uint64_t> leaf_histogram(const std::vector<Leaf>& leaves,
                                          std::uint32_t leaf_count) {
  std::vector<std::uint64_t> counts(leaf_count, 0);
  for (Leaf p : leaves) counts[p]++;
  return counts;
}

std::vector<std::uint64_t> run_leaf_capture(const ExperimentConfig& config,
                                            WorkloadKind kind, bool disable_remap,
                                            const char* role) {
  const std::uint32_t z = config.bucket_slots.front();
  const std::uint32_t l = config.heights.front();
  const TreeGeometry geometry = make_geometry(config.capacity, config.block_size, z, l);
  const std::string tag = std::string("oblivious_") + role;
  std::unique_ptr<BucketStore> inner = make_backend(config, geometry, tag);
  InstrumentedStore store(*inner);

  SeededRandom client_rng(derive_seed(config.seed, z, l, role));
  const Key key = derive_key(config, z, l);
  ClientOptions options;
  options.disable_remap_for_testing = disable_remap;
  OramClient client = OramClient::create(key, store, client_rng, options);
  store.reset_counters();  // initialization writes are not accesses

  WorkloadGenerator workload(kind, config.capacity,
                             derive_seed(config.seed, static_cast<std::uint64_t>(kind), l,
                                         "oblivious-workload"));
  for (std::uint64_t i = 0; i < config.access_count; ++i) {
    const WorkloadOp op = workload.next();
    if (op.is_write) {
      client.write(op.id, workload.next_data(config.block_size));
    } else {
      client.read(op.id);
    }
  }
  return leaf_histogram(store.read_leaves(), geometry.leaf_count);
}

}  // namespace

ObliviousnessReport run_obliviousness_test(const ExperimentConfig& config) {
  config.validate();
  const std::uint32_t l = config.heights.front();
  const std::uint64_t required = 100ull << l;
  if (config.access_count < required) {
    throw UsageError("insufficient samples: need at least 100 * 2^L = " +
                     std::to_string(required) + " accesses per workload for L=" +
                     std::to_string(l) + ", got " + std::to_string(config.access_count));
  }

  constexpr WorkloadKind kKinds[] = {WorkloadKind::kUniform, WorkloadKind::kRepeatedSingle,
                                     WorkloadKind::kSequential};
  // 3 uniformity + 3 pairwise hypotheses share the 0.001 budget.
  const double per_test = 0.001 / 6.0;

  ObliviousnessReport report;
  report.samples_per_workload = config.access_count;
  report.significance = per_test;

  std::vector<std::vector<std::uint64_t>> histograms;
  for (WorkloadKind kind : kKinds) {
    histograms.push_back(
        run_leaf_capture(config, kind, false, workload_name(kind)));
    TestLine line;
    line.name = std::string("uniformity[") + workload_name(kind) + "]";
    line.result = stats::uniformity_test(histograms.back(), per_test);
    report.uniformity.push_back(std::move(line));
  }
  for (std::size_t i = 0; i < histograms.size(); ++i) {
    for (std::size_t j = i + 1; j < histograms.size(); ++j) {
      TestLine line;
      line.name = std::string("pairwise[") + workload_name(kKinds[i]) + " vs " +
                  workload_name(kKinds[j]) + "]";
      line.result = stats::two_sample_test(histograms[i], histograms[j], per_test);
      report.pairwise.push_back(std::move(line));
    }
  }

  const std::vector<std::uint64_t> control =
      run_leaf_capture(config, WorkloadKind::kRepeatedSingle, true, "negative-control");
  report.negative_control.name = "negative-control[repeated-single, remap disabled]";
  report.negative_control.result = stats::uniformity_test(control, per_test);

  report.pass = !report.negative_control.result.pass;
  for (const TestLine& t : report.uniformity) report.pass = report.pass && t.result.pass;
  for (const TestLine& t : report.pairwise) report.pass = report.pass && t.result.pass;
  return report;
}

std::string ObliviousnessReport::to_string() const {
  std::ostringstream out;
  out << "obliviousness battery: " << samples_per_workload << " samples/workload, "
      << "per-test significance " << significance << " (0.001 Bonferroni/6)\n";
  auto line = [&](const TestLine& t, bool expect_pass) {
    char buf[192];
    std::snprintf(buf, sizeof buf, "  %-52s chi2=%12.2f df=%6llu crit=%10.2f  %s\n",
                  t.name.c_str(), t.result.statistic,
                  static_cast<unsigned long long>(t.result.degrees_of_freedom),
                  t.result.critical_value,
                  t.result.pass == expect_pass ? (expect_pass ? "PASS" : "FAIL (expected)")
                                               : (expect_pass ? "FAIL" : "UNEXPECTED PASS"));
    out << buf;
  };
  for (const TestLine& t : uniformity) line(t, true);
  for (const TestLine& t : pairwise) line(t, true);
  line(negative_control, false);
  out << (pass ? "battery: PASS\n" : "battery: FAIL\n");
  return out.str();
}

// --- plots --------------------------------------------------------------------

void emit_plots(const std::string& summary_csv, const std::string& output_dir) {
  std::ifstream in(summary_csv, std::ios::binary);
  if (!in) throw UsageError("cannot open " + summary_csv);

  std::string header;
  if (!std::getline(in, header)) throw UsageError("empty summary file: " + summary_csv);
  if (header != "Z,L,accesses,max_stash,mean_stash,p999_stash,seed") {
    throw UsageError("unexpected summary header: " + header);
  }

  struct Row {
    std::uint32_t z, l, max;
    std::uint64_t accesses;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    unsigned long long accesses, seed;
    double mean;
    unsigned z, l, mx, p999;
    if (std::sscanf(line.c_str(), "%u,%u,%llu,%u,%lf,%u,%llu", &z, &l, &accesses, &mx,
                    &mean, &p999, &seed) != 7) {
      throw UsageError("malformed summary row " + std::to_string(line_no) + ": " + line);
    }
    if (accesses == 0) {
      throw UsageError("summary row " + std::to_string(line_no) + " has an empty trace");
    }
    rows.push_back({z, l, mx, accesses});
  }
  if (rows.empty()) throw UsageError("summary file has no data rows: " + summary_csv);

  fs::create_directories(output_dir);
  std::map<std::uint32_t, std::map<std::uint32_t, std::uint32_t>> by_z;  // z -> l -> max
  std::map<std::uint32_t, std::map<std::uint32_t, std::uint32_t>> by_l;  // l -> z -> max
  for (const Row& r : rows) {
    by_z[r.z][r.l] = r.max;
    by_l[r.l][r.z] = r.max;
  }

  std::vector<std::string> series;
  for (const auto& [z, points] : by_z) {
    const std::string name = "fig2_Z" + std::to_string(z) + ".dat";
    std::ofstream out(output_dir + "/" + name, std::ios::binary | std::ios::trunc);
    out << "# L max_stash (Z=" << z << ")\n";
    for (const auto& [l, mx] : points) out << l << " " << mx << "\n";
    if (!out) throw TransportError("failed writing " + name);
    series.push_back(name);
  }
  for (const auto& [l, points] : by_l) {
    const std::string name = "fig3_L" + std::to_string(l) + ".dat";
    std::ofstream out(output_dir + "/" + name, std::ios::binary | std::ios::trunc);
    out << "# Z max_stash (L=" << l << ")\n";
    for (const auto& [z, mx] : points) out << z << " " << mx << "\n";
    if (!out) throw TransportError("failed writing " + name);
    series.push_back(name);
  }

  std::ofstream gp(output_dir + "/plot.gp", std::ios::binary | std::ios::trunc);
  gp << "# gnuplot stub: max stash size per bucket size / tree height series\n"
     << "set terminal pngcairo size 900,600\n"
     << "set key top left\n"
     << "set xlabel 'L'\nset ylabel 'max stash size'\n"
     << "set output 'fig2.png'\nplot ";
  bool first = true;
  for (const auto& [z, points] : by_z) {
    gp << (first ? "" : ", ") << "'fig2_Z" << z << ".dat' with linespoints title 'Z=" << z
       << "'";
    first = false;
  }
  gp << "\nset xlabel 'Z'\nset output 'fig3.png'\nplot ";
  first = true;
  for (const auto& [l, points] : by_l) {
    gp << (first ? "" : ", ") << "'fig3_L" << l << ".dat' with linespoints title 'L=" << l
       << "'";
    first = false;
  }
  gp << "\n";
  if (!gp) throw TransportError("failed writing plot.gp");
}

// --- bench ---------------------------------------------------------------------

BenchReport run_bench(const ExperimentConfig& config) {
  config.validate();
  const std::uint32_t z = config.bucket_slots.front();
  const std::uint32_t l = config.heights.front();
  const TreeGeometry geometry = make_geometry(config.capacity, config.block_size, z, l);
  std::unique_ptr<BucketStore> inner = make_backend(config, geometry, "bench");
  InstrumentedStore store(*inner);

  SeededRandom client_rng(derive_seed(config.seed, z, l, "bench-client"));
  const Key key = derive_key(config, z, l);
  OramClient client = OramClient::create(key, store, client_rng);
  store.reset_counters();

  WorkloadGenerator workload(config.workload, config.capacity,
                             derive_seed(config.seed, 0, l, "workload"));
  std::vector<double> micros;
  micros.reserve(config.access_count);
  for (std::uint64_t i = 0; i < config.access_count; ++i) {
    const WorkloadOp op = workload.next();
    const auto start = std::chrono::steady_clock::now();
    if (op.is_write) {
      client.write(op.id, workload.next_data(config.block_size));
    } else {
      client.read(op.id);
    }
    const auto end = std::chrono::steady_clock::now();
    micros.push_back(std::chrono::duration<double, std::micro>(end - start).count());
  }

  BenchReport report;
  report.accesses = config.access_count;
  double total = 0.0;
  for (double v : micros) total += v;
  report.mean_us = total / static_cast<double>(micros.size());
  std::sort(micros.begin(), micros.end());
  report.p50_us = micros[micros.size() / 2];
  report.p99_us = micros[std::min(micros.size() - 1, micros.size() * 99 / 100)];
  report.read_bytes_per_access =
      static_cast<double>(store.bytes_read()) / static_cast<double>(config.access_count);
  report.write_bytes_per_access =
      static_cast<double>(store.bytes_written()) / static_cast<double>(config.access_count);
  return report;
}

std::string BenchReport::to_string() const {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "accesses: %llu\nlatency mean: %.2f us  p50: %.2f us  p99: %.2f us\n"
                "bytes/access read: %.1f  written: %.1f\n",
                static_cast<unsigned long long>(accesses), mean_us, p50_us, p99_us,
                read_bytes_per_access, write_bytes_per_access);
  return buf;
}

}  // namespace pathoram::harness
