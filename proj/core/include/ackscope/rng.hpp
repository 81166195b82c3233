#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>

namespace ackscope {

// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Seeded random source. The engine (mt19937_64) is fully specified by the
// standard; the variate transforms below are written out instead of using
// <random> distributions, whose output is implementation-defined. Traces are
// therefore identical across standard libraries for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double low, double high) { return low + (high - low) * uniform01(); }

  // Standard normal (Box-Muller, polar form).
  double normal();

  // Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace ackscope
