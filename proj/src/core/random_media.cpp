#include "pinning/random_media.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace pinning::media {

namespace {

using u128 = unsigned __int128;

std::uint64_t scaled_threshold(const Rational& cum) {
  // floor(cum * 2^64); cum == 1 saturates to the maximum word.
  if (cum.num() >= cum.den()) return std::numeric_limits<std::uint64_t>::max();
  const u128 scaled = (static_cast<u128>(static_cast<std::uint64_t>(cum.num())) << 64) /
                      static_cast<u128>(static_cast<std::uint64_t>(cum.den()));
  return static_cast<std::uint64_t>(scaled);
}

ExtInt parse_value(const nlohmann::json& v) {
  if (v.is_number_integer()) return ExtInt(v.get<std::int64_t>());
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "minus_inf") return ExtInt::minus_infinity();
    const Rational r = Rational::parse(s);
    if (r.den() != 1) fail(ErrorCode::Config, "atom value '" + s + "' is not an integer");
    return ExtInt(r.num());
  }
  fail(ErrorCode::Config, "atom value must be an integer or \"minus_inf\"");
}

Rational parse_probability(const nlohmann::json& v) {
  if (!v.is_string()) {
    fail(ErrorCode::Config, "probabilities must be given as decimal strings");
  }
  try {
    return Rational::parse(v.get<std::string>());
  } catch (const PinningError& e) {
    fail(ErrorCode::Config, std::string("bad probability: ") + e.what());
  }
}

}  // namespace

DistributionSpec::DistributionSpec(std::vector<Atom> atoms, std::optional<std::int64_t> upper_bound) {
  require(!atoms.empty(), "distribution needs at least one atom");
  std::map<std::int64_t, Rational> merged;
  Rational total;
  for (const auto& a : atoms) {
    require(Rational() <= a.probability, "negative probability " + a.probability.to_string());
    total = total + a.probability;
    if (a.value.is_minus_infinity()) {
      minus_inf_mass_ = minus_inf_mass_ + a.probability;
    } else if (!a.probability.is_zero()) {
      auto [it, inserted] = merged.try_emplace(a.value.value(), a.probability);
      if (!inserted) it->second = it->second + a.probability;
    }
  }
  require(total == Rational::integer(1),
          "probabilities sum to " + total.to_string() + ", expected exactly 1");
  require(!merged.empty(), "distribution has no finite atom with positive probability");

  Rational cum = minus_inf_mass_;
  minus_inf_threshold_ = minus_inf_mass_.is_zero() ? 0 : scaled_threshold(minus_inf_mass_);
  for (const auto& [value, p] : merged) {
    values_.push_back(value);
    probs_.push_back(p);
    cum = cum + p;
    cum_.push_back(cum.to_long_double());
    thresholds_.push_back(scaled_threshold(cum));
  }
  upper_bound_ = upper_bound.value_or(values_.back());
  require(upper_bound_ >= values_.back(),
          "upper_bound " + std::to_string(upper_bound_) + " below largest atom " +
              std::to_string(values_.back()));
}

DistributionSpec DistributionSpec::point_mass(std::int64_t value) {
  return DistributionSpec({Atom{ExtInt(value), Rational::integer(1)}});
}

DistributionSpec DistributionSpec::plus_minus_one(Rational p) {
  require(Rational() <= p && p <= Rational::integer(1), "Bernoulli parameter outside [0, 1]");
  return DistributionSpec({Atom{ExtInt(1), p}, Atom{ExtInt(-1), Rational::integer(1) - p}});
}

long double DistributionSpec::cdf(std::int64_t x) const {
  auto it = std::upper_bound(values_.begin(), values_.end(), x);
  if (it == values_.begin()) return minus_inf_mass_.to_long_double();
  return cum_[static_cast<std::size_t>(it - values_.begin()) - 1];
}

ExtInt DistributionSpec::sample(std::uint64_t bits) const {
  if (bits < minus_inf_threshold_) return ExtInt::minus_infinity();
  auto it = std::upper_bound(thresholds_.begin(), thresholds_.end(), bits);
  if (it == thresholds_.end()) return ExtInt(values_.back());
  return ExtInt(values_[static_cast<std::size_t>(it - thresholds_.begin())]);
}

std::vector<Atom> DistributionSpec::atoms() const {
  std::vector<Atom> out;
  if (!minus_inf_mass_.is_zero()) out.push_back({ExtInt::minus_infinity(), minus_inf_mass_});
  for (std::size_t k = 0; k < values_.size(); ++k) out.push_back({ExtInt(values_[k]), probs_[k]});
  return out;
}

DistributionSpec distribution_from_json(const nlohmann::json& j) {
  try {
    if (j.contains("bernoulli_p")) {
      return DistributionSpec::plus_minus_one(parse_probability(j.at("bernoulli_p")));
    }
    if (j.contains("point_mass")) {
      const ExtInt v = parse_value(j.at("point_mass"));
      if (!v.is_finite()) fail(ErrorCode::Config, "point_mass must be finite");
      return DistributionSpec::point_mass(v.value());
    }
    if (!j.contains("atoms") || !j.at("atoms").is_array() || j.at("atoms").empty()) {
      fail(ErrorCode::Config, "distribution: expected non-empty 'atoms', 'bernoulli_p' or 'point_mass'");
    }
    std::vector<Atom> atoms;
    for (const auto& pair : j.at("atoms")) {
      if (!pair.is_array() || pair.size() != 2) {
        fail(ErrorCode::Config, "distribution: each atom is a [value, probability] pair");
      }
      atoms.push_back({parse_value(pair[0]), parse_probability(pair[1])});
    }
    Rational sum;
    for (const auto& a : atoms) sum = sum + a.probability;
    if (!(sum == Rational::integer(1))) {
      const long double dev = std::fabs(sum.to_long_double() - 1.0L);
      if (dev > 1e-12L) {
        fail(ErrorCode::Config, "distribution: probabilities sum to " + sum.to_string() +
                                    " (deviation above 1e-12)");
      }
      Rational rest;
      for (std::size_t k = 0; k + 1 < atoms.size(); ++k) rest = rest + atoms[k].probability;
      atoms.back().probability = Rational::integer(1) - rest;
    }
    std::optional<std::int64_t> ub;
    if (j.contains("upper_bound")) ub = j.at("upper_bound").get<std::int64_t>();
    return DistributionSpec(std::move(atoms), ub);
  } catch (const PinningError& e) {
    if (e.code() == ErrorCode::Config) throw;
    fail(ErrorCode::Config, std::string("distribution: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Config, std::string("distribution: ") + e.what());
  }
}

nlohmann::json distribution_to_json(const DistributionSpec& spec) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : spec.atoms()) {
    atoms.push_back({a.value.is_finite() ? nlohmann::json(a.value.value()) : nlohmann::json("minus_inf"),
                     a.probability.to_string()});
  }
  return {{"atoms", atoms}, {"upper_bound", spec.upper_bound()}};
}

double poisson_cell_side(double intensity) {
  if (intensity <= 16.0) return 1.0;
  const int halvings = static_cast<int>(std::ceil(std::log2(std::sqrt(intensity / 16.0))));
  return std::ldexp(1.0, -halvings);
}

PointSample sample_poisson_points(const Window& window, double intensity, std::uint64_t seed,
                                  std::uint64_t stream) {
  require(intensity > 0 && std::isfinite(intensity), "Poisson intensity must be positive");
  require(window.x_max > window.x_min && window.y_max > window.y_min,
          "Poisson window must have positive area");
  const double side = poisson_cell_side(intensity);
  const double mean = intensity * side * side;
  const double p0 = std::exp(-mean);
  const std::uint64_t cell_seed = seed ^ rng::splitmix64(stream + 0x5bd1e995ULL);

  const auto cx0 = static_cast<std::int64_t>(std::floor(window.x_min / side));
  const auto cx1 = static_cast<std::int64_t>(std::floor(window.x_max / side));
  const auto cy0 = static_cast<std::int64_t>(std::floor(window.y_min / side));
  const auto cy1 = static_cast<std::int64_t>(std::floor(window.y_max / side));

  PointSample out{window, {}, intensity};
  for (std::int64_t cx = cx0; cx <= cx1; ++cx) {
    for (std::int64_t cy = cy0; cy <= cy1; ++cy) {
      rng::LocalStream ls(cell_seed, rng::Stream::PoissonPoints, rng::word(cx), rng::word(cy));
      // Inversion; mean per cell is at most 16.
      const double u = ls.unit();
      int count = 0;
      double p = p0;
      double cdf = p0;
      while (u >= cdf && count < 4096) {
        ++count;
        p *= mean / count;
        cdf += p;
      }
      for (int k = 0; k < count; ++k) {
        const double x = (static_cast<double>(cx) + ls.unit()) * side;
        const double y = (static_cast<double>(cy) + ls.unit()) * side;
        if (window.contains(x, y)) out.points.push_back({x, y});
      }
    }
  }
  std::sort(out.points.begin(), out.points.end(),
            [](const Point& a, const Point& b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
  return out;
}

long double max_cdf(const DistributionSpec& spec, int depth, std::int64_t t) {
  require(depth >= 0, "depth must be non-negative");
  long double g = 1.0L;
  for (int k = 0; k <= depth; ++k) {
    g *= spec.cdf(t + k);
    if (g == 0.0L) break;
  }
  return g;
}

MeanMax mean_max_exact(const DistributionSpec& spec, int depth) {
  require(depth >= 1, "mean_max_exact: depth must be at least 1");
  const auto& values = spec.finite_values();
  const double work = static_cast<double>(values.size()) * (depth + 1.0) * (depth + 1.0);
  if (work > 2e8) {
    fail(ErrorCode::BudgetExceeded, "mean_max_exact: support too large for depth " + std::to_string(depth));
  }
  // Support of M_d on finite values: {a − k}.
  std::vector<std::int64_t> support;
  support.reserve(values.size() * static_cast<std::size_t>(depth + 1));
  for (std::int64_t a : values) {
    for (int k = 0; k <= depth; ++k) support.push_back(a - k);
  }
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());

  const std::int64_t reach = spec.upper_bound() - depth - 1;
  long double mean_finite = 0.0L;
  long double tail = 0.0L;
  for (std::int64_t t : support) {
    const long double mass = max_cdf(spec, depth, t) - max_cdf(spec, depth, t - 1);
    if (mass <= 0.0L) continue;
    mean_finite += static_cast<long double>(t) * mass;
    if (reach > t) tail += static_cast<long double>(reach - t) * mass;
  }

  // Renewal over all-(−∞) blocks: E = (E[M_d; finite] − q^{d+1}(d+1)) / (1 − q^{d+1}).
  const long double q = spec.minus_infinity_mass().to_long_double();
  long double all_minus_inf = 0.0L;
  long double denom = 1.0L;
  if (q > 0.0L) {
    const long double lq = std::log(q);
    all_minus_inf = std::exp((depth + 1) * lq);
    denom = -std::expm1((depth + 1) * lq);
  }
  if (!(denom > 1e-300L)) {
    fail(ErrorCode::Divergent, "mean_max_exact: lower tail does not converge (all blocks −∞)");
  }
  const long double value = (mean_finite - all_minus_inf * (depth + 1)) / denom;
  const long double err = tail / denom;
  if (!std::isfinite(static_cast<double>(value)) || !std::isfinite(static_cast<double>(err))) {
    fail(ErrorCode::Divergent, "mean_max_exact: expectation diverges to −∞");
  }
  return {static_cast<double>(value), static_cast<double>(err)};
}

McEstimate mean_max_mc(const DistributionSpec& spec, std::int64_t samples, int depth,
                       std::uint64_t seed) {
  require(samples >= 1, "mean_max_mc: samples must be at least 1");
  require(depth >= 0, "mean_max_mc: depth must be non-negative");
  constexpr std::int64_t kMaxBlocks = 1 << 20;
  const std::int64_t upper = spec.upper_bound();
  const std::int64_t block_len = depth + 1;

  long double mean = 0.0L;
  long double m2 = 0.0L;
  for (std::int64_t s = 0; s < samples; ++s) {
    std::int64_t result = 0;
    for (std::int64_t block = 0;; ++block) {
      if (block >= kMaxBlocks) {
        fail(ErrorCode::BudgetExceeded, "mean_max_mc: no finite value within the block budget");
      }
      ExtInt best = ExtInt::minus_infinity();
      for (std::int64_t k = 0; k <= depth; ++k) {
        if (best.is_finite() && best.value() >= upper - k) break;
        const ExtInt z = spec.sample(rng::bits64(seed, rng::Stream::MeanMax, rng::word(s),
                                                 rng::word(block * block_len + k)));
        if (z.is_finite()) best = std::max(best, z - k);
      }
      if (best.is_finite()) {
        result = best.value() - block * block_len;
        break;
      }
    }
    const long double delta = static_cast<long double>(result) - mean;
    mean += delta / static_cast<long double>(s + 1);
    m2 += delta * (static_cast<long double>(result) - mean);
  }
  double se = 0.0;
  if (samples > 1) {
    const long double var = m2 / static_cast<long double>(samples - 1);
    se = static_cast<double>(std::sqrt(var / static_cast<long double>(samples)));
  }
  return {static_cast<double>(mean), se};
}

PinningCheck pinning_condition(const DistributionSpec& spec, std::int64_t F, int depth) {
  const MeanMax mm = mean_max_exact(spec, depth);
  const double margin = mm.value - static_cast<double>(F);
  return {margin > 0.0, margin};
}

}  // namespace pinning::media
