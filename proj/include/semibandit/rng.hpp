#pragma once

#include <cstdint>
#include <random>

namespace semibandit {

// Mixes a (seed, stream) pair into a fresh 64-bit seed. Used to derive
// independent per-trial / per-phase generators from one master seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Seeded generator with explicit uniform mappings so that draws are
// bit-identical across platforms (std::mt19937_64 is fully specified by the
// standard; the std distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in {0, ..., n-1}, unbiased (rejection sampling).
  std::uint64_t below(std::uint64_t n);

  // Child generator on an independent stream. Depends only on the seed this
  // generator was constructed with, not on how much it has been consumed.
  Rng split(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace semibandit
