#pragma once

#include <cmath>
#include <cstdint>

namespace gchain {

/// splitmix64 finalizer; also used to derive independent stream seeds.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/**
 * xoshiro256** (Blackman & Vigna), state filled from a splitmix64 sequence.
 * Variates are produced from raw bits here rather than through <random>
 * distributions so a seed gives the same stream with every standard library.
 */
class Xoshiro256ss {
 public:
  static constexpr const char* kName = "xoshiro256**/splitmix64";

  explicit Xoshiro256ss(std::uint64_t seed) noexcept {
    std::uint64_t x = seed;
    for (auto& word : s_) {
      word = splitmix64_mix(x);
      x += 0x9e3779b97f4a7c15ULL;
    }
  }

  std::uint64_t next() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on (0, 1].
  double uniform_pos() noexcept {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double exponential(double rate) noexcept { return -std::log(uniform_pos()) / rate; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
};

/// Seed of replication r: base ^ splitmix64_mix(r).
constexpr std::uint64_t replication_seed(std::uint64_t base, std::uint64_t r) noexcept {
  return base ^ splitmix64_mix(r);
}

/// Seed of warehouse w within a replication.
constexpr std::uint64_t stream_seed(std::uint64_t replication, std::uint64_t w) noexcept {
  return splitmix64_mix(replication ^ splitmix64_mix(0x5bd1e995ULL + w));
}

}  // namespace gchain
