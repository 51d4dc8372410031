#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pinning/lipschitz.hpp"
#include "pinning/random_media.hpp"

namespace pinning::continuum {

/// Scales of the box construction. Distances are in the units of the
/// continuum plane; `d_gap` is the horizontal gap between box columns.
struct ScaleParams {
  double k = 1;
  double alpha = 1.6;
  double lambda_plus = 1;
  double lambda_minus = 0.01;
  double l = 0;
  double d_gap = 0;
  double h = 0;
  double b = 0;
  std::int64_t N = 0;
  double rho = 0;
  double F_star = 0;
  double S = 0;
  double p0 = 0;

  /// Mean number of negative centers in one (l + d_gap) × 6h count rectangle.
  double count_mean() const { return 6.0 * lambda_minus * h * (l + d_gap); }
};

/// Chooses l, h, b, N, ρ and F* so that a box is open with probability at
/// least p₀(1, 6). Throws InvalidArgument for bad inputs and Infeasible when
/// the invariants cannot be met.
ScaleParams select_scales(double k, double alpha, double lambda_plus, double lambda_minus);

/// F* = k / (18 l): half the largest force both connector height bounds allow
/// when d = l and h = k l / 4.
double pinned_force(double k, double l);

/// Throws Infeasible naming the first invariant that fails.
void validate_scales(const ScaleParams& s);

/// Lower bound on P(box open):
/// (1 − e^{−λ⁺(l−2ρ)(h−2ρ)}) · e^{−4λ⁻(b+(1+α)ρ)²} · (1 − μ^N/N!).
double open_probability_bound(const ScaleParams& s);

struct Rect {
  double x_min = 0, x_max = 0, y_min = 0, y_max = 0;
};

/// Box Q(i, j): [i(l+d) − l/2, i(l+d) + l/2] × [j h, (j+1) h].
Rect box_rect(std::int64_t i, std::int64_t j, const ScaleParams& s);

/// Rectangle of width l + d_gap and height 6h centered on the box center,
/// in which fewer than N negative centers are allowed.
Rect count_rect(std::int64_t i, std::int64_t j, const ScaleParams& s);

/// Positive and negative obstacle centers, both sorted by x.
struct ObstacleSet {
  std::vector<media::Point> positives;
  std::vector<media::Point> negatives;
  double rho = 0;

  /// Indices [first, last) of points with x in [x_lo, x_hi].
  static std::pair<std::size_t, std::size_t> x_range(std::span<const media::Point> pts, double x_lo,
                                                      double x_hi);
};

/// Samples both Poisson families on `window` (independent streams).
ObstacleSet sample_obstacles(const media::Window& window, const ScaleParams& s, std::uint64_t seed);

/// Window covering the count rectangles of all boxes i ∈ [0, columns),
/// j ∈ [1, rows], with a margin of one unit.
media::Window obstacle_window(std::int64_t columns, std::int64_t rows, const ScaleParams& s);

struct SiteClass {
  bool open = false;
  std::optional<media::Point> core;
};

SiteClass classify_site(std::int64_t i, std::int64_t j, const ObstacleSet& obstacles, const ScaleParams& s);

/// One piece of v in local form: v(x) = a t² + b t + c with t = x − x0.
struct Quadratic {
  double a = 0, b = 0, c = 0;
  double value(double t) const { return (a * t + b) * t + c; }
  double slope(double t) const { return 2 * a * t + b; }
};

/// Continuous piecewise-quadratic function. Coefficients of segment s are
/// relative to its left breakpoint; absolute monomials would lose most of
/// their digits for the steep core pieces far from the origin.
struct PiecewiseQuadratic {
  std::vector<double> breakpoints;   // size M + 1, strictly increasing
  std::vector<Quadratic> segments;   // size M
  std::vector<bool> is_core;         // size M
  double F_star = 0;
  double rho = 0;

  double operator()(double x) const;
  std::size_t segment_at(double x) const;
};

/// Convex parabola over the core [x_c − ρ, x_c + ρ] through the two upper
/// corners with slopes ∓k there; v'' = k/ρ.
Quadratic core_parabola(const media::Point& core, const ScaleParams& s);

/// Sorted, disjoint closed intervals.
class IntervalSet {
 public:
  void add(double lo, double hi);
  const std::vector<std::pair<double, double>>& intervals() const { return parts_; }
  double measure() const;
  bool empty() const { return parts_.empty(); }
  bool contains(double x) const;
  /// Complement within [lo, hi].
  std::vector<std::pair<double, double>> gaps(double lo, double hi) const;

 private:
  std::vector<std::pair<double, double>> parts_;
};

/// Union of [y − 2αρ, y + 2αρ] over negative centers within 2αρ of the
/// vertical line x = border_x.
IntervalSet blocked_intervals(double border_x, std::span<const media::Point> negatives, const ScaleParams& s);

struct Connector {
  Quadratic segment;  // local coordinate t = x − x_A
  double F = 0;
  double length = 0;  // m
};

/// Parabola v(t) = y_A + (F m/2 + n/m) t − (F/2) t² from corner A to corner
/// B = A + (m, n). F is taken from [F*, 2F*] ∩ {F ≤ 2(km − |n|)/m²} minus the
/// F-values for which the arc passes within 2αρ (vertically, at the closest
/// abscissa) of a negative center; the midpoint of the widest remaining gap
/// is used. Throws Infeasible when nothing is left.
Connector connect_cores(const media::Point& corner_a, const media::Point& corner_b,
                        std::span<const media::Point> negatives, const ScaleParams& s);

/// Cores of consecutive surface columns (left to right) joined by connectors.
PiecewiseQuadratic assemble(std::span<const media::Point> cores, const ObstacleSet& obstacles,
                            const ScaleParams& s);

using Shape = std::function<double(double, double)>;

/// Radial bump: 1.05 on r ≤ √2, smooth monotone decay to 0 at r = α.
double default_shape(double x, double y, double alpha);

/// Force at (x, y), or nullopt when (x, y) lies within αρ of a negative
/// center. Shapes are assumed nonnegative.
std::optional<double> eval_force(double x, double y, const ObstacleSet& obstacles, const ScaleParams& s,
                                 const Shape& shape);

struct ViscosityViolation {
  enum class Kind { Residual, NegProximity, Kink, Continuity };
  Kind kind = Kind::Residual;
  double x = 0;
  double value = 0;
};

struct ViscosityReport {
  double max_residual = 0;
  std::int64_t residual_violations = 0;
  std::int64_t kink_violations = 0;
  std::int64_t continuity_violations = 0;
  double min_v = 0;
  /// Exact distance from the graph to the nearest negative center; values
  /// larger than the box length l are only lower bounds.
  double min_neg_clearance = 0;
  std::int64_t samples = 0;
  std::vector<ViscosityViolation> violations;  // first 100

  bool passed(const ScaleParams& s) const {
    return residual_violations == 0 && kink_violations == 0 && continuity_violations == 0 && min_v > 0 &&
           min_neg_clearance > s.alpha * s.rho;
  }
};

/// Checks v'' − f(x, v(x)) + F* ≤ 10⁻⁹ S on every piece, the kink condition
/// at breakpoints, continuity, min v and clearance from negative centers.
///
/// Pieces with 2a + F* ≤ 10⁻⁹ S cannot violate the residual bound unless f
/// is −∞, which happens exactly when the clearance is ≤ αρ; clearance is
/// computed exactly, so those pieces are only sampled at their ends and
/// midpoint. Other pieces are sampled every `grid_step`.
ViscosityReport verify_viscosity(const PiecewiseQuadratic& v, const ObstacleSet& obstacles,
                                 const ScaleParams& s, double grid_step, const Shape& shape);

struct ArcDistance {
  double distance = 0;
  double t = 0;  // local abscissa of the closest point
};

/// Distance from `p` to the graph of q over [0, len] (origin at x0).
ArcDistance distance_to_arc(const Quadratic& q, double x0, double len, const media::Point& p);

struct ContinuumRun {
  ScaleParams scales;
  ObstacleSet obstacles;
  std::optional<percolation::SiteGrid> grid;
  std::optional<percolation::LipschitzSurface> surface;
  std::vector<media::Point> cores;
  std::optional<PiecewiseQuadratic> v;
  std::optional<ViscosityReport> report;
  std::string status;  // "ok", "no_surface", "infeasible", "verify_failed"
  std::string detail;
};

struct ContinuumParams {
  double k = 1;
  double alpha = 1.6;
  double lambda_plus = 1;
  double lambda_minus = 0.01;
  std::int64_t columns = 50;
  std::int64_t rows = 8;
  std::uint64_t seed = 0;
  /// Fraction of ρ used as the sampling step on core pieces.
  double grid_step_fraction = 1.0 / 20.0;
};

/// select_scales → sample obstacles → classify boxes into a 6-independent
/// site grid → minimal open surface → assemble → verify.
ContinuumRun run_continuum(const ContinuumParams& params);

nlohmann::json scales_to_json(const ScaleParams& s);
nlohmann::json to_json(const PiecewiseQuadratic& v);
PiecewiseQuadratic piecewise_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ViscosityReport& r);
/// CSV with header "x,y,sign".
void write_obstacles_csv(std::ostream& os, const ObstacleSet& obstacles);

}  // namespace pinning::continuum
