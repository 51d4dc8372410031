#pragma once

// Counter-based random numbers (Philox4x32-10, Salmon et al. SC'11).
//
// Every random quantity in the library is a pure function of
// (seed, stream, counter words), so lattice fields and point processes can be
// queried lazily in any order and still agree across runs and threads.

#include <array>
#include <cmath>
#include <cstdint>

namespace pinning::rng {

/// Named streams keep unrelated consumers of one seed independent.
enum class Stream : std::uint64_t {
  ObstacleField = 0x6f62737466696c64ULL,
  PoissonPoints = 0x706f6973736f6e00ULL,
  Dynamics = 0x64796e616d696373ULL,
  MeanMax = 0x6d65616e6d617800ULL,
  Percolation = 0x7065726300000000ULL,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

using PhiloxBlock = std::array<std::uint32_t, 4>;

inline PhiloxBlock philox4x32_10(PhiloxBlock ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53;
  constexpr std::uint32_t kM1 = 0xCD9E8D57;
  constexpr std::uint32_t kW0 = 0x9E3779B9;
  constexpr std::uint32_t kW1 = 0xBB67AE85;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

/// Key derived from (seed, stream).
inline std::array<std::uint32_t, 2> make_key(std::uint64_t seed, Stream stream) {
  const std::uint64_t k = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream)));
  return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

/// 128 random bits addressed by two 64-bit counter words.
inline PhiloxBlock block(std::uint64_t seed, Stream stream, std::uint64_t a, std::uint64_t b) {
  return philox4x32_10({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                        static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)},
                       make_key(seed, stream));
}

inline std::uint64_t bits64(std::uint64_t seed, Stream stream, std::uint64_t a, std::uint64_t b) {
  const PhiloxBlock r = block(seed, stream, a, b);
  return (static_cast<std::uint64_t>(r[1]) << 32) | r[0];
}

/// Uniform in [0, 1) with 53 random bits.
inline double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Uniform in (0, 1]; safe as the argument of log().
inline double to_unit_open0(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

inline double uniform(std::uint64_t seed, Stream stream, std::uint64_t a, std::uint64_t b) {
  return to_unit(bits64(seed, stream, a, b));
}

/// Sequential generator for a variable number of draws attached to one
/// counter address (e.g. all points inside one Poisson cell).
class LocalStream {
 public:
  LocalStream(std::uint64_t seed, Stream stream, std::uint64_t a, std::uint64_t b) {
    const PhiloxBlock r = block(seed, stream, a, b);
    state_ = (static_cast<std::uint64_t>(r[3]) << 32 | r[2]) ^
             splitmix64((static_cast<std::uint64_t>(r[1]) << 32) | r[0]);
  }

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double unit() { return to_unit(next()); }

 private:
  std::uint64_t state_;
};

/// Maps a signed lattice coordinate onto a counter word.
inline std::uint64_t word(std::int64_t x) { return static_cast<std::uint64_t>(x); }

}  // namespace pinning::rng
