#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace paththerm {

/// Named pipeline stages; mixed into seeds so that sub-streams of different
/// stages never overlap for the same master seed.
enum class Stage : std::uint64_t {
  lattice_walk = 1,
  closed_bridge = 2,
  feynman_kac = 3,
  partition = 4,
  velocity_corr = 5,
  bridge_paths = 6,
  user = 99,
};

constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// xoshiro256** stream. Satisfies UniformRandomBitGenerator.
///
/// Streams are splittable: `fork(i)` derives an independent child from the
/// stream's *seed key* (not its current position), so children are a pure
/// function of (key, i) and a parallel ensemble gives the same numbers for
/// any worker count.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed = 0x5EEDULL) : key_(seed) { reseed(seed); }
  RngStream(std::uint64_t seed, Stage stage, std::uint64_t index = 0)
      : RngStream(mix(mix(seed, static_cast<std::uint64_t>(stage)), index)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
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
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  RngStream fork(std::uint64_t index) const noexcept { return RngStream(mix(key_, index + 1)); }

  /// Child stream that differs on every call; ensemble estimators take one
  /// of these and fork it per work item, so consecutive calls on the same
  /// stream draw fresh numbers.
  RngStream split() noexcept { return RngStream(mix(~key_, ++splits_)); }

  std::uint64_t key() const noexcept { return key_; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  static constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t s = a ^ (b * 0xD1B54A32D192ED03ULL);
    splitmix64(s);
    return splitmix64(s);
  }
  void reseed(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  std::uint64_t key_;
  std::uint64_t splits_ = 0;
  std::array<std::uint64_t, 4> s_{};
};

/// Standard normal variates (ziggurat); the path samplers draw n_steps of
/// these per path, so this is the hot loop of every ensemble.
using StandardNormal = boost::random::normal_distribution<double>;

}  // namespace paththerm
