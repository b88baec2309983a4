#pragma once

// Seeded generators with a fixed, library-independent output sequence.
// std::mt19937_64 is specified bit-exactly by the standard, but the
// std::*_distribution adaptors are not, so the conversions live here.

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace xlmap {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via Box-Muller; caches the second variate.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

/// FNV-1a over the bytes of s.
std::uint64_t hash_string(std::string_view s);

/// m distinct indices from [0, n) in ascending order (partial Fisher-Yates).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m, Rng& rng);

}  // namespace xlmap
