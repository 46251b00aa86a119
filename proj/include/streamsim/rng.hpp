#pragma once

#include <cstdint>

namespace streamsim {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Mixes stream tags into a base seed so different concerns (channel, traffic
/// per client, tie breaking, ...) get independent substreams.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag ^ 0x517CC1B727220A95ull));
}

inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t tag_a,
                                   std::uint64_t tag_b) {
  return derive_stream(derive_stream(seed, tag_a), tag_b);
}

/// SplitMix64 sequence generator. Deliberately not <random>: the standard
/// distributions are implementation-defined, and reproducibility of every run
/// from (config, seed) is part of the contract here.
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return splitmix64(state_ += 0x9E3779B97F4A7C15ull); }

  /// Uniform in [0, 1) with 53 random bits.
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [0, bound). Multiply-shift; the O(2^-64) bias is irrelevant
  /// at the sample sizes used here.
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

 private:
  std::uint64_t state_;
};

/// Stateless draw keyed by (seed, a, b). Channel outcomes use this with
/// (client, slot) keys, so a replayed seed reproduces the identical success
/// sequence no matter which policy is asking.
inline double keyed_u01(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(a ^ 0xA0761D6478BD642Full));
  h = splitmix64(h ^ splitmix64(b ^ 0xE7037ED1A0B428DBull));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace streamsim
