#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "pinning/counter_rng.hpp"
#include "pinning/ext_int.hpp"
#include "pinning/rational.hpp"

namespace pinning::media {

struct Atom {
  ExtInt value;
  Rational probability;
};

/// Law of a single obstacle strength: finitely many atoms in Z ∪ {−∞}
/// with exact rational probabilities and a finite essential supremum.
class DistributionSpec {
 public:
  /// Atoms with equal values are merged. Probabilities must sum to exactly 1.
  /// `upper_bound` defaults to the largest finite atom with positive mass and
  /// must dominate every finite atom when given.
  explicit DistributionSpec(std::vector<Atom> atoms,
                            std::optional<std::int64_t> upper_bound = std::nullopt);

  static DistributionSpec point_mass(std::int64_t value);
  /// +1 with probability p, −1 otherwise.
  static DistributionSpec plus_minus_one(Rational p);

  /// Finite atoms (positive mass only), ascending by value.
  const std::vector<std::int64_t>& finite_values() const { return values_; }
  const std::vector<Rational>& finite_probabilities() const { return probs_; }
  const Rational& minus_infinity_mass() const { return minus_inf_mass_; }
  std::int64_t upper_bound() const { return upper_bound_; }
  std::int64_t min_finite_value() const { return values_.front(); }

  /// P(Z ≤ x), including the mass at −∞.
  long double cdf(std::int64_t x) const;

  /// Inverse-CDF sample from 64 uniform bits (−∞ occupies the lowest slice).
  ExtInt sample(std::uint64_t bits) const;

  /// Atoms as given to the constructor (merged), −∞ first.
  std::vector<Atom> atoms() const;

 private:
  std::vector<std::int64_t> values_;
  std::vector<Rational> probs_;
  std::vector<long double> cum_;           // cum_[k] = P(Z ≤ values_[k])
  std::vector<std::uint64_t> thresholds_;  // floor(cum * 2^64), −∞ slice first
  Rational minus_inf_mass_;
  std::uint64_t minus_inf_threshold_ = 0;
  std::int64_t upper_bound_ = 0;
};

/// Loads a spec from the harness configuration:
///   {"atoms": [["1", "0.5"], ["minus_inf", "0.1"], ...], "upper_bound": 3}
///   {"bernoulli_p": "0.45"}   (+1 w.p. p, −1 otherwise)
///   {"point_mass": 2}
/// Probabilities are decimal (or "a/b") strings; a decimal sum within 1e-12
/// of one is accepted and the last atom absorbs the exact remainder.
DistributionSpec distribution_from_json(const nlohmann::json& j);
nlohmann::json distribution_to_json(const DistributionSpec& spec);

/// Quenched i.i.d. obstacle field f(i, j), generated lazily from the seed.
struct SeededField {
  std::uint64_t seed = 0;
  std::shared_ptr<const DistributionSpec> spec;

  SeededField(std::uint64_t s, DistributionSpec d)
      : seed(s), spec(std::make_shared<const DistributionSpec>(std::move(d))) {}
  SeededField(std::uint64_t s, std::shared_ptr<const DistributionSpec> d)
      : seed(s), spec(std::move(d)) {}

  ExtInt operator()(std::int64_t i, std::int64_t j) const {
    return spec->sample(rng::bits64(seed, rng::Stream::ObstacleField, rng::word(i), rng::word(j)));
  }
};

inline ExtInt site_value(const SeededField& field, std::int64_t i, std::int64_t j) {
  return field(i, j);
}

/// Half-open rectangle [x_min, x_max) × [y_min, y_max).
struct Window {
  double x_min = 0, x_max = 0, y_min = 0, y_max = 0;

  double area() const { return (x_max - x_min) * (y_max - y_min); }
  bool contains(double x, double y) const {
    return x >= x_min && x < x_max && y >= y_min && y < y_max;
  }
};

struct Point {
  double x = 0, y = 0;
  bool operator==(const Point&) const = default;
};

struct PointSample {
  Window window;
  std::vector<Point> points;
  double intensity = 0;
};

/// Poisson point process restricted to `window`.
///
/// Points are generated per cell of a fixed lattice (cell side depends only
/// on the intensity), so sampling two adjacent windows yields exactly the
/// points of their union. Output is sorted by (x, y).
PointSample sample_poisson_points(const Window& window, double intensity, std::uint64_t seed,
                                  std::uint64_t stream);

/// Side of the generation lattice used for a given intensity.
double poisson_cell_side(double intensity);

struct MeanMax {
  double value = 0;
  double error_bound = 0;
};

/// Exact expectation of the depth-truncated running maximum
///   M_d = max_{0≤k≤d} (Z_k − k),
/// renewed over blocks of d+1 draws that are all −∞ (a block that is entirely
/// −∞ shifts the origin by d+1 and restarts). For specs without −∞ mass this
/// is exactly E[M_d]. The value is a lower bound on E[M_∞] and
/// E[M_∞] ≤ value + error_bound. Throws Divergent if no finite answer exists.
MeanMax mean_max_exact(const DistributionSpec& spec, int depth = 64);

/// P(M_d ≤ t) = Π_{k=0}^{d} P(Z ≤ t + k).
long double max_cdf(const DistributionSpec& spec, int depth, std::int64_t t);

struct McEstimate {
  double estimate = 0;
  double std_error = 0;
};

/// Monte-Carlo estimate of the quantity returned by mean_max_exact().
McEstimate mean_max_mc(const DistributionSpec& spec, std::int64_t samples, int depth,
                       std::uint64_t seed);

struct PinningCheck {
  bool satisfied = false;
  double margin = 0;
};

/// satisfied iff (exact lower bound of E[M]) − F > 0.
PinningCheck pinning_condition(const DistributionSpec& spec, std::int64_t F, int depth = 64);

}  // namespace pinning::media
