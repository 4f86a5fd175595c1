#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace ddpglab {

/// xoshiro256** seeded through splitmix64.
///
/// Child streams are derived with `Rng::derive(root_seed, stream)`: the child
/// is seeded with `root_seed ^ (0x9E3779B97F4A7C15 * (stream + 1))`, which
/// splitmix64 then expands into the 256-bit state. Every consumer of
/// randomness in a run owns its own stream, so adding draws in one consumer
/// never shifts the sequence seen by another.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) noexcept {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  static Rng derive(std::uint64_t root_seed, std::uint64_t stream) noexcept {
    return Rng(root_seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform01();
  }

  /// Uniform index in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept {
    // Lemire's multiply-shift; the bias is < n / 2^64 and irrelevant here.
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>((*this)()) * n) >> 64);
  }

  bool operator==(const Rng&) const = default;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  static std::uint64_t splitmix64(std::uint64_t& x) noexcept {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::array<std::uint64_t, 4> state_{};
};

/// Stream identifiers used when splitting a run's root seed.
enum class Stream : std::uint64_t {
  actor_init = 1,
  critic_init = 2,
  noise = 3,
  minibatch = 4,
  candidates = 5,
  drift_samples = 6,
};

inline Rng derive(std::uint64_t root_seed, Stream stream) noexcept {
  return Rng::derive(root_seed, static_cast<std::uint64_t>(stream));
}

}  // namespace ddpglab
