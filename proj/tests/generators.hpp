#pragma once
// Hand-rolled generators for the property tests. Everything is driven by a
// seeded std::mt19937_64 so a failing case can be replayed from its index.

#include <cstdint>
#include <random>
#include <vector>

#include "pinning/random_media.hpp"
#include "pinning/rational.hpp"

namespace gen {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(eng_);
  }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(eng_); }
  std::uint64_t seed() { return eng_(); }

  /// Random law with 1..max_atoms atoms on [lo, hi], probabilities k/den.
  /// With `allow_minus_inf` one extra atom may sit at −∞ with mass ≤ 1/2.
  pinning::media::DistributionSpec spec(int max_atoms = 5, std::int64_t lo = -4, std::int64_t hi = 4,
                                        bool allow_minus_inf = false) {
    using pinning::ExtInt;
    using pinning::Rational;
    const std::int64_t den = 64;
    const int n = static_cast<int>(integer(1, max_atoms));
    std::int64_t left = den;
    std::vector<pinning::media::Atom> atoms;
    if (allow_minus_inf && coin(0.4)) {
      const std::int64_t w = integer(1, den / 2);
      atoms.push_back({ExtInt::minus_infinity(), Rational(w, den)});
      left -= w;
    }
    for (int k = 0; k < n; ++k) {
      const std::int64_t w = k + 1 == n ? left : integer(1, std::max<std::int64_t>(1, left - (n - k - 1)));
      if (w <= 0) break;
      atoms.push_back({ExtInt(integer(lo, hi)), Rational(w, den)});
      left -= w;
    }
    return pinning::media::DistributionSpec(std::move(atoms));
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace gen
