#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <vector>

// Counter-based random number generation (Philox 4x32-10).
//
// Every simulation replicate gets its own substream derived from a master
// seed plus a list of integer tags (scenario id, grid indices, replicate
// index, ...). Substreams can be created in any order on any worker and
// always yield the same values, which is what makes parallel experiments
// reproducible independent of scheduling.

namespace mvrank::rng {

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         const std::array<std::uint32_t, 2>& key) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
  ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
         static_cast<std::uint32_t>(p1),
         static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
         static_cast<std::uint32_t>(p0)};
}

inline std::array<std::uint32_t, 4> philox_block(
    std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    philox_round(ctr, key);
  }
  return ctr;
}

// Fibonacci-hash based 64-bit mixer (splitmix64 finalizer).
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Tag helper: fold a double into a substream tag via its bit pattern.
inline std::uint64_t tag(double v) { return std::bit_cast<std::uint64_t>(v); }
inline std::uint64_t tag(std::uint64_t v) { return v; }

/// Deterministic counter-based stream. Cheap to construct; all state is a
/// 64-bit key plus a 128-bit counter.
class Stream {
 public:
  /// Substream identified by (master_seed, tags...). Distinct tag tuples
  /// give statistically independent streams.
  static Stream substream(std::uint64_t master_seed,
                          std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = detail::mix64(master_seed);
    for (std::uint64_t t : tags) h = detail::mix64(h ^ t);
    Stream s{raw{}};
    s.key_ = {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    const std::uint64_t hi = detail::mix64(h ^ 0x5851F42D4C957F2Dull);
    s.ctr_hi_ = {static_cast<std::uint32_t>(hi), static_cast<std::uint32_t>(hi >> 32)};
    return s;
  }

  explicit Stream(std::uint64_t seed = 0) { *this = substream(seed, {}); }

  std::uint32_t next_u32() {
    if (buf_pos_ == 4) refill();
    return buf_[buf_pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double next_double_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (second value cached).
  double next_gaussian() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = next_double_open();
    const double u2 = next_double();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = radius * std::sin(angle);
    have_cached_ = true;
    return radius * std::cos(angle);
  }

  /// Uniform integer in [0, bound) without modulo bias.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t v = next_u64();
      if (v >= threshold) return v % bound;
    }
  }

  /// Fisher-Yates draw of k distinct indices out of n (order randomized).
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(next_below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

  // UniformRandomBitGenerator interface.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next_u64(); }

 private:
  struct raw {};
  explicit Stream(raw) {}

  void refill() {
    buf_ = detail::philox_block({static_cast<std::uint32_t>(block_),
                                 static_cast<std::uint32_t>(block_ >> 32),
                                 ctr_hi_[0], ctr_hi_[1]},
                                key_);
    ++block_;
    buf_pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 2> ctr_hi_{};
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace mvrank::rng
