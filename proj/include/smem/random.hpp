#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>

namespace smem {

/// Seeded random stream keyed by (seed, stream, counter).
///
/// The engine is std::mt19937_64 initialised through std::seed_seq; both are
/// fully specified by the standard, and the conversions to uniform and normal
/// variates are done here rather than through the implementation-defined
/// <random> distributions, so a key produces the same numbers on every
/// platform.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1).
  double uniform_open();
  // Standard normal by Box–Muller.
  double normal();
  // Uniform integer in [0, bound).
  std::size_t below(std::size_t bound);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

// Fisher–Yates shuffle driven by `rng`.
void shuffle(std::span<std::size_t> values, Rng& rng);

}  // namespace smem
