#pragma once

// xoshiro256** with SplitMix64 seeding. Every replica owns a stream derived
// from (seed, experiment tag, replica index), so results do not depend on
// scheduling or thread count.

#include <cstdint>
#include <limits>

namespace condwalk {

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t state) : state_(state) {}
  constexpr std::uint64_t operator()() { return splitmix64_mix(state_ += 0x9E3779B97F4A7C15ULL); }

 private:
  std::uint64_t state_;
};

class Xoshiro256 {
 public:
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  explicit Xoshiro256(std::uint64_t seed = 0) {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm();
  }

  result_type operator()() {
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

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

/// Stream for one replica of one experiment.
inline Xoshiro256 replica_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t replica) {
  std::uint64_t z = splitmix64_mix(seed);
  z = splitmix64_mix(z ^ (tag * 0xD1B54A32D192ED03ULL));
  z = splitmix64_mix(z ^ (replica * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL));
  return Xoshiro256(z);
}

}  // namespace condwalk
