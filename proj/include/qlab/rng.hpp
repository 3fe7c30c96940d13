#pragma once

#include <cstdint>

namespace qlab {

// Counter-based generator: output i is a SplitMix64 finalizer applied to
// key + i * golden. Streams are derived by hashing the parent key with a
// stream id, so split() never consumes parent output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next();

  // Uniform on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Standard normal via Box-Muller.
  double normal();

  bool coin() { return (next() >> 63) != 0; }

  Rng split(std::uint64_t stream) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  Rng(std::uint64_t key, std::uint64_t counter, int);

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace qlab
