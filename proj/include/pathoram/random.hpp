#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "pathoram/geometry.hpp"

namespace pathoram {

/// Source of the protocol's random choices (leaf remapping, eviction sampling,
/// seal nonces, dummy filler). The default implementation is a CSPRNG; tests
/// and the harness inject a seeded deterministic source through the same
/// interface.
class RandomSource {
 public:
  virtual ~RandomSource() = default;

  virtual void fill(std::span<std::uint8_t> out) = 0;

  std::uint64_t next_u64();

  /// Uniform draw from [0, bound) via rejection sampling; bound >= 1.
  std::uint64_t uniform(std::uint64_t bound);
};

/// OS-backed CSPRNG (OpenSSL RAND_bytes).
class SystemRandom final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

/// Deterministic source for tests and reproducible experiments.
class SeededRandom final : public RandomSource {
 public:
  explicit SeededRandom(std::uint64_t seed) : gen_(seed) {}
  void fill(std::span<std::uint8_t> out) override;

 private:
  std::mt19937_64 gen_;
};

/// Uniformly random leaf in [0, 2^L).
Leaf sample_leaf(const TreeGeometry& g, RandomSource& rng);

}  // namespace pathoram
