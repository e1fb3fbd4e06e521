// Counter-based deterministic random numbers.
//
// Every draw is a pure hash of (seed, purpose, replicate, counter), so any
// worker can regenerate any stream regardless of scheduling order, and the
// same CLI config always produces byte-identical output.
#pragma once

#include <cstdint>

namespace endseq::rng {

inline constexpr std::uint64_t kDefaultSeed = 20140817;

// splitmix64 finalizer.
inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum class Purpose : std::uint64_t {
  StreamDriver = 1,   // EndStream (U, Y) slots
  Path = 2,           // iid / comonotonic / cm path draws
  Coupling = 3,       // coupling-search permutations and branches
  Bootstrap = 4,      // bootstrap resampling
  SpotCheck = 5,      // convexity spot checks
  Oracle = 6,         // randomized oracle inputs
};

class Stream {
 public:
  Stream(std::uint64_t seed, Purpose purpose, std::uint64_t replicate)
      : key_(mix(mix(seed ^ 0xD1B54A32D192ED03ULL) ^
                 mix(static_cast<std::uint64_t>(purpose) * 0x9E6C63D0876A9ULL) ^
                 mix(replicate * 0xACB86C8F7D2A1BD5ULL))) {}

  std::uint64_t nextU64() { return mix(key_ ^ (counter_++ * 0xD6E8FEB86659FD93ULL)); }

  /// Uniform draw strictly inside (0, 1).
  double u01() {
    return (static_cast<double>(nextU64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound) without modulo bias worth caring about
  /// at simulation sample sizes.
  std::uint64_t below(std::uint64_t bound) { return nextU64() % bound; }

  void skipTo(std::uint64_t counter) { counter_ = counter; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace endseq::rng
