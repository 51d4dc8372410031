#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "pinning/ext_int.hpp"
#include "pinning/random_media.hpp"

namespace pinning::discrete {

/// Barrier v on [−W, W] built by the greedy provisional-value procedure.
///
/// Storage is offset-indexed; use the accessors. Provisional values v̄ are
/// kept on [−W−1, W+1] so that the frontier sites ±W can be checked against
/// v̄(±(W+1)). v̄(0) is defined as v(0).
struct SupersolutionPath {
  std::int64_t half_width = 0;
  std::int64_t F = 0;
  std::int64_t n_start = 0;
  std::vector<std::int64_t> v;         // i + W
  std::vector<std::int64_t> v_bar;     // i + W + 1
  std::vector<std::int64_t> argmax_m;  // i + W, zero at i = 0

  std::int64_t value(std::int64_t i) const { return v.at(static_cast<std::size_t>(i + half_width)); }
  std::int64_t provisional(std::int64_t i) const {
    return v_bar.at(static_cast<std::size_t>(i + half_width + 1));
  }
  std::int64_t drop(std::int64_t i) const {
    return argmax_m.at(static_cast<std::size_t>(i + half_width));
  }

  /// D(n) = v̄(n) − v(n−1) for 1 ≤ n ≤ W+1; for negative n the mirrored
  /// increment v̄(n) − v(n+1).
  std::int64_t increment(std::int64_t n) const;
};

struct SearchBudget {
  /// Maximum number of vertical levels probed when looking for the start
  /// value or for a finite maximizer in one column.
  std::int64_t vertical = 1 << 22;
};

struct ColumnChoice {
  std::int64_t m = 0;      // drop below the provisional value
  std::int64_t score = 0;  // f(column, top − m) − m
};

/// argmax over m ≥ 0 of f(column, top − m) − m, smallest maximizer.
/// Terminates once upper_bound − m can no longer beat the best score.
ColumnChoice best_drop(const media::SeededField& field, std::int64_t column, std::int64_t top,
                       const SearchBudget& budget = {});

SupersolutionPath construct_supersolution(const media::SeededField& field, std::int64_t n_start,
                                          std::int64_t F, std::int64_t half_width,
                                          const SearchBudget& budget = {});

struct Violation {
  std::int64_t site = 0;
  std::int64_t lhs = 0;  // Δ₁v(site)
  ExtInt rhs;            // f(site, v(site)) − F
};

/// Exact check of v(i+1) + v(i−1) − 2v(i) ≤ f(i, v(i)) − F on [−W, W],
/// using v̄(±(W+1)) beyond the window.
std::vector<Violation> verify_discrete(const SupersolutionPath& path, const media::SeededField& field,
                                       std::int64_t F);

struct PathStats {
  std::int64_t min_v = 0;
  double forward_slope = 0;
  double backward_slope = 0;
  bool nonnegative = false;
};

/// Slopes estimate the linear growth rate of the increments v(n) − v(n−1)
/// (which is E[M] − F) over the outer half of each direction:
///   forward = (Δv(W) − Δv(h)) / (W − h), h = ⌈W/2⌉, Δv(n) = v(n) − v(n−1).
PathStats path_stats(const SupersolutionPath& path);

/// Columnar text: comment header with metadata, then one row "i v v_bar m".
void write_path(std::ostream& os, const SupersolutionPath& path);
SupersolutionPath read_path(std::istream& is);

}  // namespace pinning::discrete
