#include "pathoram/random.hpp"

#include <openssl/rand.h>

#include <cstring>
#include <limits>

#include "pathoram/errors.hpp"

namespace pathoram {

std::uint64_t RandomSource::next_u64() {
  std::uint8_t buf[8];
  fill(buf);
  std::uint64_t v;
  std::memcpy(&v, buf, sizeof v);
  return v;
}

std::uint64_t RandomSource::uniform(std::uint64_t bound) {
  if (bound == 0) throw PreconditionError("uniform bound must be >= 1");
  if (bound == 1) return 0;
  // Reject draws in the tail that would bias the modulus.
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      (std::numeric_limits<std::uint64_t>::max() % bound + 1) % bound;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v > limit);
  return v % bound;
}

void SystemRandom::fill(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    throw Error("system randomness unavailable");
  }
}

void SeededRandom::fill(std::span<std::uint8_t> out) {
  std::size_t i = 0;
  while (i < out.size()) {
    std::uint64_t v = gen_();
    std::size_t n = std::min<std::size_t>(8, out.size() - i);
    std::memcpy(out.data() + i, &v, n);
    i += n;
  }
}

Leaf sample_leaf(const TreeGeometry& g, RandomSource& rng) {
  return static_cast<Leaf>(rng.uniform(g.leaf_count));
}

}  // namespace pathoram
