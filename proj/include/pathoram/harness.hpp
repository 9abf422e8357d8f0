#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pathoram/client.hpp"
#include "pathoram/net.hpp"
#include "pathoram/stats.hpp"
#include "pathoram/store.hpp"

namespace pathoram::harness {

enum class WorkloadKind { kUniform, kRepeatedSingle, kSequential };
enum class BackendKind { kMemory, kFile, kRemote };

WorkloadKind workload_from_name(const std::string& name);
const char* workload_name(WorkloadKind kind);
BackendKind backend_from_name(const std::string& name);

struct ExperimentConfig {
  std::uint64_t capacity = 1024;
  std::uint32_t block_size = 64;
  std::vector<std::uint32_t> bucket_slots{4};  // Z sweep
  std::vector<std::uint32_t> heights{10};      // L sweep
  WorkloadKind workload = WorkloadKind::kUniform;
  std::uint64_t access_count = 100000;
  std::uint64_t seed = 1;
  BackendKind backend = BackendKind::kMemory;
  std::string remote_host = "127.0.0.1";
  std::uint16_t remote_port = 0;
  std::string file_dir;    // directory for file-backed stores
  bool integrity = false;
  std::string output_dir;  // empty: keep results in memory only
  std::uint32_t threads = 1;

  void validate() const;
};

struct StashSummary {
  std::uint32_t bucket_slots = 0;
  std::uint32_t height = 0;
  std::uint64_t accesses = 0;
  std::uint32_t max = 0;
  double mean = 0.0;
  std::uint32_t p999 = 0;  // 99.9th percentile of post-access stash size
};

struct StashTrace {
  std::uint32_t bucket_slots = 0;
  std::uint32_t height = 0;
  std::vector<std::uint32_t> sizes;  // one post-access stash size per access
  StashSummary summary() const;
};

/// One seeded workload per (Z, L) cell on a fresh client. Identical config and
/// seed produce byte-identical CSVs regardless of backend. When output_dir is
/// set, writes trace.csv (Z,L,access_index,stash_size), summary.csv and one
/// summary_Z{z}_L{l}.csv per cell.
std::vector<StashTrace> run_stash_experiment(const ExperimentConfig& config);

struct TestLine {
  std::string name;
  stats::ChiSquareResult result;
};

struct ObliviousnessReport {
  std::uint64_t samples_per_workload = 0;
  double significance = 0.0;           // per-test level after Bonferroni
  std::vector<TestLine> uniformity;    // one per workload kind
  std::vector<TestLine> pairwise;      // one per workload pair
  TestLine negative_control;           // remap-disabled client; must FAIL
  bool pass = false;

  std::string to_string() const;
};

/// Captures revealed-leaf sequences for the three workload kinds, tests each
/// for uniformity and each pair for indistinguishability (chi-square,
/// significance 0.001, Bonferroni-corrected across the battery), and runs the
/// remap-disabled negative control, which must fail uniformity. Refuses to run
/// with fewer than 100 * 2^L accesses per workload.
ObliviousnessReport run_obliviousness_test(const ExperimentConfig& config);

/// Reads summary.csv and writes per-series plot data: fig2_Z{z}.dat (max stash
/// vs. L for each Z), fig3_L{l}.dat (max stash vs. Z for each L) and a gnuplot
/// stub plot.gp.
void emit_plots(const std::string& summary_csv, const std::string& output_dir);

struct BenchReport {
  std::uint64_t accesses = 0;
  double mean_us = 0.0;
  double p50_us = 0.0;
  double p99_us = 0.0;
  double read_bytes_per_access = 0.0;
  double write_bytes_per_access = 0.0;

  std::string to_string() const;
};

/// Per-access latency and byte counts over the configured backend.
BenchReport run_bench(const ExperimentConfig& config);

// Deterministic logical request stream, independent of the client's RNG.
struct WorkloadOp {
  bool is_write = false;
  BlockId id = 0;
};

class WorkloadGenerator {
 public:
  WorkloadGenerator(WorkloadKind kind, std::uint64_t capacity, std::uint64_t seed);
  WorkloadOp next();
  Bytes next_data(std::uint32_t block_size);

 private:
  WorkloadKind kind_;
  std::uint64_t capacity_;
  std::uint64_t index_ = 0;
  SeededRandom rng_;
};

/// Stable per-cell seed derivation; `role` separates the client stream from
/// the workload stream (the workload seed ignores Z so Z-sweeps at equal L
/// replay the same logical requests).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                          const char* role);

/// Backend factory shared by the harness and the CLI. The returned store is
/// owned; `file_tag` names the store file for file-backed cells.
std::unique_ptr<BucketStore> make_backend(const ExperimentConfig& config,
                                          const TreeGeometry& geometry,
                                          const std::string& file_tag);

}  // namespace pathoram::harness
