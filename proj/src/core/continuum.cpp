#include "pinning/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "pinning/error.hpp"

namespace pinning::continuum {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kPositiveStream = 1;
constexpr std::uint64_t kNegativeStream = 2;

// ln p0 with p0 = 1 − 8^{-6}; the per-event target is p0^{1/3}.
double log_open_target() { return std::log1p(-std::pow(8.0, -6)) / 3.0; }

// ln(μ^N / N!)
double log_poisson_tail_term(double mu, std::int64_t N) {
  return static_cast<double>(N) * std::log(mu) - std::lgamma(static_cast<double>(N) + 1.0);
}

void check(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::Infeasible, "scales: " + what);
}

}  // namespace

double pinned_force(double k, double l) { return k / (18.0 * l); }

ScaleParams select_scales(double k, double alpha, double lambda_plus, double lambda_minus) {
  require(std::isfinite(k) && k > 0 && k <= 1, "select_scales: k must lie in (0, 1]");
  require(std::isfinite(alpha) && alpha > std::sqrt(2.0), "select_scales: alpha must exceed sqrt(2)");
  require(std::isfinite(lambda_plus) && lambda_plus > 0, "select_scales: lambda_plus must be positive");
  require(std::isfinite(lambda_minus) && lambda_minus > 0, "select_scales: lambda_minus must be positive");

  ScaleParams s;
  s.k = k;
  s.alpha = alpha;
  s.lambda_plus = lambda_plus;
  s.lambda_minus = lambda_minus;
  s.p0 = percolation::critical_probability(1, 6);

  const double log_target = log_open_target();
  const double log_miss = std::log(-std::expm1(log_target));  // ln(1 − target)

  // Positive core present: 1 − exp(−λ⁺ h l / 4) ≥ target with h = k l / 4.
  auto enough_positives = [&](double l) { return -lambda_plus * k * l * l / 16.0 <= log_miss; };
  double lo = 1.0, hi = 1.0;
  if (enough_positives(1.0)) {
    while (enough_positives(lo)) lo /= 2;
    hi = 2 * lo;
  } else {
    while (!enough_positives(hi)) hi *= 2;
    lo = hi / 2;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (enough_positives(mid) ? hi : lo) = mid;
  }
  s.l = hi;
  s.d_gap = s.l;
  s.h = k * s.l / 4.0;

  // Clear strip: exp(−4λ⁻(2b)²) ≥ target.
  s.b = std::min(0.99 * s.h, std::sqrt(-log_target / (16.0 * lambda_minus)));

  // Few negatives: 1 − μ^N/N! > target.
  const double mu = s.count_mean();
  s.N = 1;
  while (log_poisson_tail_term(mu, s.N) >= log_miss) {
    if (++s.N > 100'000'000) fail(ErrorCode::Infeasible, "scales: negative-count cap N does not converge");
  }

  s.rho = k * s.b * (s.l - s.b) / (288.0 * alpha * static_cast<double>(s.N) * s.l);
  for (int halvings = 0;; ++halvings) {
    const bool ok = s.b >= (1 + alpha) * s.rho && s.l >= 4 * s.rho && s.h >= 4 * s.rho &&
                    s.h > (alpha - 1) * s.rho;
    if (ok) break;
    if (halvings > 200 || !(s.rho > 0)) fail(ErrorCode::Infeasible, "scales: no admissible obstacle size rho");
    s.rho /= 2;
  }
  if (!std::isnormal(s.rho)) fail(ErrorCode::Infeasible, "scales: obstacle size rho underflows");

  s.F_star = pinned_force(k, s.l);
  s.S = 2.0 * k / s.rho;
  validate_scales(s);
  return s;
}

void validate_scales(const ScaleParams& s) {
  check(s.k > 0 && s.k <= 1, "k outside (0, 1]");
  check(s.alpha > std::sqrt(2.0), "alpha <= sqrt(2)");
  check(s.l > 0 && s.d_gap > 0 && s.h > 0 && s.b > 0 && s.rho > 0 && s.N >= 1, "non-positive scale");
  check(s.k * s.d_gap > 2 * s.h, "k d <= 2h");
  check(s.b < s.h, "b >= h");
  check(s.b < s.d_gap / 2, "b >= d/2");
  check(s.b >= (1 + s.alpha) * s.rho, "b < (1 + alpha) rho");
  check(s.h > (s.alpha - 1) * s.rho, "h <= (alpha - 1) rho");
  check(s.l >= 4 * s.rho && s.h >= 4 * s.rho, "l or h below 4 rho");
  check(s.F_star == pinned_force(s.k, s.l), "F_star != k / (18 l)");
  check(2 * s.F_star <= s.S / 2, "2 F_star > S / 2");
  check(std::fabs(s.S - 2 * s.k / s.rho) <= 1e-12 * s.S, "S != 2k / rho");
  const double rho_cap = s.k * s.b * (s.l - s.b) / (288.0 * s.alpha * static_cast<double>(s.N) * s.l);
  check(s.rho <= rho_cap * (1 + 1e-12), "rho above k b (l - b) / (288 alpha N l)");

  const double log_target = log_open_target();
  const double log_miss = std::log(-std::expm1(log_target));
  check(-s.lambda_plus * s.h * s.l / 4.0 <= log_miss * (1 - 1e-12), "positive-core probability below target");
  check(-4.0 * s.lambda_minus * 4.0 * s.b * s.b >= log_target * (1 + 1e-12), "clear-strip probability below target");
  check(log_poisson_tail_term(s.count_mean(), s.N) < log_miss, "negative-count probability below target");
}

double open_probability_bound(const ScaleParams& s) {
  const double core = -std::expm1(-s.lambda_plus * (s.l - 2 * s.rho) * (s.h - 2 * s.rho));
  const double r = s.b + (1 + s.alpha) * s.rho;
  const double strip = std::exp(-4.0 * s.lambda_minus * r * r);
  const double count = -std::expm1(log_poisson_tail_term(s.count_mean(), s.N));
  return core * strip * count;
}

Rect box_rect(std::int64_t i, std::int64_t j, const ScaleParams& s) {
  require(j >= 1, "box_rect: j must be at least 1");
  const double cx = static_cast<double>(i) * (s.l + s.d_gap);
  return {cx - s.l / 2, cx + s.l / 2, static_cast<double>(j) * s.h, static_cast<double>(j + 1) * s.h};
}

Rect count_rect(std::int64_t i, std::int64_t j, const ScaleParams& s) {
  const double cx = static_cast<double>(i) * (s.l + s.d_gap);
  const double cy = (static_cast<double>(j) + 0.5) * s.h;
  const double half_w = (s.l + s.d_gap) / 2;
  return {cx - half_w, cx + half_w, cy - 3 * s.h, cy + 3 * s.h};
}

std::pair<std::size_t, std::size_t> ObstacleSet::x_range(std::span<const media::Point> pts, double x_lo,
                                                         double x_hi) {
  auto first = std::lower_bound(pts.begin(), pts.end(), x_lo,
                                [](const media::Point& p, double x) { return p.x < x; });
  auto last = std::upper_bound(first, pts.end(), x_hi,
                               [](double x, const media::Point& p) { return x < p.x; });
  return {static_cast<std::size_t>(first - pts.begin()), static_cast<std::size_t>(last - pts.begin())};
}

ObstacleSet sample_obstacles(const media::Window& window, const ScaleParams& s, std::uint64_t seed) {
  ObstacleSet out;
  out.positives = media::sample_poisson_points(window, s.lambda_plus, seed, kPositiveStream).points;
  out.negatives = media::sample_poisson_points(window, s.lambda_minus, seed, kNegativeStream).points;
  out.rho = s.rho;
  return out;
}

media::Window obstacle_window(std::int64_t columns, std::int64_t rows, const ScaleParams& s) {
  require(columns >= 1 && rows >= 1, "obstacle_window: need at least one box");
  const Rect lo = count_rect(0, 1, s);
  const Rect hi = count_rect(columns - 1, rows, s);
  return {lo.x_min - 1, hi.x_max + 1, lo.y_min - 1, hi.y_max + 1};
}

SiteClass classify_site(std::int64_t i, std::int64_t j, const ObstacleSet& obstacles, const ScaleParams& s) {
  const Rect box = box_rect(i, j, s);
  const double rho = s.rho;

  std::vector<media::Point> candidates;
  const auto [p0, p1] = ObstacleSet::x_range(obstacles.positives, box.x_min + rho, box.x_max - rho);
  for (std::size_t k = p0; k < p1; ++k) {
    const auto& p = obstacles.positives[k];
    if (p.y >= box.y_min + rho && p.y <= box.y_max - rho) candidates.push_back(p);
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const media::Point& a, const media::Point& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });

  const double half = s.b + rho + s.alpha * rho;
  std::optional<media::Point> core;
  for (const auto& c : candidates) {
    const auto [n0, n1] = ObstacleSet::x_range(obstacles.negatives, c.x - half, c.x + half);
    bool clear = true;
    for (std::size_t k = n0; k < n1 && clear; ++k) {
      if (std::fabs(obstacles.negatives[k].y - c.y) <= half) clear = false;
    }
    if (clear) {
      core = c;
      break;
    }
  }
  if (!core) return {};

  const Rect cr = count_rect(i, j, s);
  const auto [n0, n1] = ObstacleSet::x_range(obstacles.negatives, cr.x_min, cr.x_max);
  std::int64_t count = 0;
  for (std::size_t k = n0; k < n1; ++k) {
    const double y = obstacles.negatives[k].y;
    if (y >= cr.y_min && y <= cr.y_max) ++count;
  }
  if (count >= s.N) return {};
  return {true, core};
}

std::size_t PiecewiseQuadratic::segment_at(double x) const {
  require(!segments.empty(), "piecewise quadratic has no segments");
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
  std::size_t idx = it == breakpoints.begin() ? 0 : static_cast<std::size_t>(it - breakpoints.begin()) - 1;
  return std::min(idx, segments.size() - 1);
}

double PiecewiseQuadratic::operator()(double x) const {
  const std::size_t s = segment_at(x);
  return segments[s].value(x - breakpoints[s]);
}

Quadratic core_parabola(const media::Point& core, const ScaleParams& s) {
  require(s.k < 4, "core_parabola: k must be below 4");
  return {s.k / (2 * s.rho), -s.k, core.y + s.rho};
}

void IntervalSet::add(double lo, double hi) {
  if (hi < lo) return;
  auto it = std::lower_bound(parts_.begin(), parts_.end(), std::make_pair(lo, hi));
  it = parts_.insert(it, {lo, hi});
  // Merge with the predecessor, then absorb successors.
  if (it != parts_.begin() && std::prev(it)->second >= it->first) {
    std::prev(it)->second = std::max(std::prev(it)->second, it->second);
    it = parts_.erase(it) - 1;
  }
  while (std::next(it) != parts_.end() && std::next(it)->first <= it->second) {
    it->second = std::max(it->second, std::next(it)->second);
    parts_.erase(std::next(it));
  }
}

double IntervalSet::measure() const {
  double m = 0;
  for (const auto& [lo, hi] : parts_) m += hi - lo;
  return m;
}

bool IntervalSet::contains(double x) const {
  return std::any_of(parts_.begin(), parts_.end(), [x](const auto& p) { return p.first <= x && x <= p.second; });
}

std::vector<std::pair<double, double>> IntervalSet::gaps(double lo, double hi) const {
  std::vector<std::pair<double, double>> out;
  double cursor = lo;
  for (const auto& [a, b] : parts_) {
    if (b < cursor) continue;
    if (a > hi) break;
    if (a > cursor) out.emplace_back(cursor, a);
    cursor = std::max(cursor, b);
  }
  if (cursor < hi) out.emplace_back(cursor, hi);
  return out;
}

IntervalSet blocked_intervals(double border_x, std::span<const media::Point> negatives, const ScaleParams& s) {
  const double r = 2 * s.alpha * s.rho;
  IntervalSet out;
  for (const auto& p : negatives) {
    if (std::fabs(p.x - border_x) <= r) out.add(p.y - r, p.y + r);
  }
  return out;
}

Connector connect_cores(const media::Point& corner_a, const media::Point& corner_b,
                        std::span<const media::Point> negatives, const ScaleParams& s) {
  const double m = corner_b.x - corner_a.x;
  const double n = corner_b.y - corner_a.y;
  if (!(m > 0)) fail(ErrorCode::Infeasible, "connector: corners are not ordered left to right");
  const double f_lo = s.F_star;
  const double f_hi = std::min(2 * s.F_star, 2 * (s.k * m - std::fabs(n)) / (m * m));
  if (f_hi < f_lo) fail(ErrorCode::Infeasible, "connector: slope bound leaves no admissible force");

  const double band = 2 * s.alpha * s.rho;
  const double reach = s.alpha * s.rho;
  IntervalSet blocked;
  for (const auto& p : negatives) {
    if (p.x < corner_a.x - reach || p.x > corner_b.x + reach) continue;
    const double xs = std::clamp(p.x - corner_a.x, 0.0, m);
    const double w = xs * (m - xs) / 2;  // dv/dF at xs
    const double base = n * xs / m;
    const double target = p.y - corner_a.y;
    if (w <= 0) {
      if (std::fabs(base - target) <= band) blocked.add(f_lo, f_hi);
      continue;
    }
    blocked.add((target - base - band) / w, (target - base + band) / w);
  }

  double best_lo = 0, best_hi = -1;
  for (const auto& [a, b] : blocked.gaps(f_lo, f_hi)) {
    if (b - a > best_hi - best_lo) {
      best_lo = a;
      best_hi = b;
    }
  }
  if (!(best_hi > best_lo)) fail(ErrorCode::Infeasible, "connector: every force in [F*, 2F*] is blocked");
  const double F = 0.5 * (best_lo + best_hi);
  return {{-F / 2, F * m / 2 + n / m, corner_a.y}, F, m};
}

PiecewiseQuadratic assemble(std::span<const media::Point> cores, const ObstacleSet& obstacles,
                            const ScaleParams& s) {
  require(!cores.empty(), "assemble: no cores");
  PiecewiseQuadratic v;
  v.F_star = s.F_star;
  v.rho = s.rho;
  const double rho = s.rho;
  for (std::size_t i = 0; i < cores.size(); ++i) {
    const auto& c = cores[i];
    if (i > 0) {
      const auto& prev = cores[i - 1];
      const media::Point a{prev.x + rho, prev.y + rho};
      const media::Point b{c.x - rho, c.y + rho};
      const double reach = s.alpha * rho;
      const auto [n0, n1] = ObstacleSet::x_range(obstacles.negatives, a.x - reach, b.x + reach);
      const std::span<const media::Point> nearby(obstacles.negatives.data() + n0, n1 - n0);
      try {
        const Connector conn = connect_cores(a, b, nearby, s);
        v.segments.push_back(conn.segment);
        v.is_core.push_back(false);
      } catch (const PinningError& e) {
        if (e.code() != ErrorCode::Infeasible) throw;
        fail(ErrorCode::Infeasible, std::string(e.what()) + " (between surface columns " + std::to_string(i - 1) +
                                        " and " + std::to_string(i) + ")");
      }
    }
    v.breakpoints.push_back(c.x - rho);
    v.breakpoints.push_back(c.x + rho);
    v.segments.push_back(core_parabola(c, s));
    v.is_core.push_back(true);
  }
  return v;
}

double default_shape(double x, double y, double alpha) {
  const double r = std::hypot(x, y);
  const double plateau = std::sqrt(2.0);
  if (r <= plateau) return 1.05;
  if (r >= alpha) return 0.0;
  const double t = (r - plateau) / (alpha - plateau);
  auto g = [](double u) { return u > 0 ? std::exp(-1.0 / u) : 0.0; };
  const double up = g(1 - t);
  return 1.05 * up / (up + g(t));
}

std::optional<double> eval_force(double x, double y, const ObstacleSet& obstacles, const ScaleParams& s,
                                 const Shape& shape) {
  const double reach = s.alpha * s.rho;
  const auto [n0, n1] = ObstacleSet::x_range(obstacles.negatives, x - reach, x + reach);
  for (std::size_t k = n0; k < n1; ++k) {
    const auto& p = obstacles.negatives[k];
    if (std::hypot(x - p.x, y - p.y) <= reach) return std::nullopt;
  }
  const auto [p0, p1] = ObstacleSet::x_range(obstacles.positives, x - reach, x + reach);
  double f = 0;
  for (std::size_t k = p0; k < p1; ++k) {
    const auto& p = obstacles.positives[k];
    if (std::fabs(y - p.y) > reach) continue;
    f += s.S * shape((x - p.x) / s.rho, (y - p.y) / s.rho);
  }
  return f;
}

ArcDistance distance_to_arc(const Quadratic& q, double x0, double len, const media::Point& p) {
  const double dx0 = p.x - x0;
  const double e = q.c - p.y;
  auto dist2 = [&](double t) {
    const double dy = (q.a * t + q.b) * t + e;
    return (t - dx0) * (t - dx0) + dy * dy;
  };
  // Half the derivative of dist2: a cubic in t.
  auto half_grad = [&](double t) { return (t - dx0) + ((q.a * t + q.b) * t + e) * (2 * q.a * t + q.b); };

  std::vector<double> cuts{0.0, len};
  if (q.a != 0) {
    // Stationary points of half_grad: 6a²t² + 6abt + (b² + 2ae + 1) = 0.
    const double disc = (q.b * q.b - 4 * q.a * e - 2) / 3;
    if (disc > 0) {
      const double r = std::sqrt(disc);
      for (double t : {(-q.b - r) / (2 * q.a), (-q.b + r) / (2 * q.a)}) {
        if (t > 0 && t < len) cuts.push_back(t);
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());

  ArcDistance best{std::sqrt(dist2(0.0)), 0.0};
  auto consider = [&](double t) {
    const double d = std::sqrt(dist2(t));
    if (d < best.distance) best = {d, t};
  };
  consider(len);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    double lo = cuts[k], hi = cuts[k + 1];
    double glo = half_grad(lo), ghi = half_grad(hi);
    if (glo == 0) consider(lo);
    if ((glo < 0) == (ghi < 0) || ghi == 0) continue;
    for (int it = 0; it < 200 && hi > lo; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double gm = half_grad(mid);
      if ((gm < 0) == (glo < 0)) {
        lo = mid;
        glo = gm;
      } else {
        hi = mid;
      }
    }
    consider(lo);
    consider(hi);
  }
  return best;
}

ViscosityReport verify_viscosity(const PiecewiseQuadratic& v, const ObstacleSet& obstacles,
                                 const ScaleParams& s, double grid_step, const Shape& shape) {
  require(!v.segments.empty(), "verify_viscosity: empty function");
  require(v.breakpoints.size() == v.segments.size() + 1, "verify_viscosity: breakpoint count mismatch");
  require(grid_step > 0 && grid_step <= s.rho / 20 * (1 + 1e-12), "verify_viscosity: grid_step must lie in (0, rho/20]");

  const double tol = 1e-9 * s.S;
  const double reach = s.alpha * s.rho;
  ViscosityReport rep;
  rep.max_residual = -kInf;
  rep.min_v = kInf;
  rep.min_neg_clearance = kInf;
  auto record = [&](ViscosityViolation::Kind kind, double x, double value) {
    if (rep.violations.size() < 100) rep.violations.push_back({kind, x, value});
  };

  for (std::size_t si = 0; si < v.segments.size(); ++si) {
    const Quadratic& q = v.segments[si];
    const double x0 = v.breakpoints[si];
    const double len = v.breakpoints[si + 1] - x0;
    require(len > 0, "verify_viscosity: breakpoints must increase");

    double lowest = std::min(q.value(0), q.value(len));
    if (q.a > 0) {
      const double tv = -q.b / (2 * q.a);
      if (tv > 0 && tv < len) lowest = std::min(lowest, q.value(tv));
    }
    rep.min_v = std::min(rep.min_v, lowest);

    ArcDistance closest{kInf, 0};
    const auto [n0, n1] = ObstacleSet::x_range(obstacles.negatives, x0 - s.l, x0 + len + s.l);
    for (std::size_t k = n0; k < n1; ++k) {
      const ArcDistance d = distance_to_arc(q, x0, len, obstacles.negatives[k]);
      if (d.distance < closest.distance) closest = d;
    }
    rep.min_neg_clearance = std::min(rep.min_neg_clearance, closest.distance);

    const bool concave_enough = 2 * q.a + v.F_star <= tol;
    std::int64_t steps = 2;
    if (!concave_enough) {
      const double want = std::ceil(len / grid_step);
      if (want > 1e8) fail(ErrorCode::BudgetExceeded, "verify_viscosity: too many samples on one piece");
      steps = std::max<std::int64_t>(1, static_cast<std::int64_t>(want));
    }
    bool proximity_seen = false;
    for (std::int64_t k = 0; k <= steps; ++k) {
      const double t = len * static_cast<double>(k) / static_cast<double>(steps);
      const double x = x0 + t;
      const auto f = eval_force(x, q.value(t), obstacles, s, shape);
      ++rep.samples;
      if (!f) {
        ++rep.residual_violations;
        proximity_seen = true;
        record(ViscosityViolation::Kind::NegProximity, x, q.value(t));
        continue;
      }
      const double res = 2 * q.a - *f + v.F_star;
      rep.max_residual = std::max(rep.max_residual, res);
      if (res > tol) {
        ++rep.residual_violations;
        record(ViscosityViolation::Kind::Residual, x, res);
      }
    }
    if (concave_enough && !proximity_seen && closest.distance <= reach) {
      ++rep.residual_violations;
      record(ViscosityViolation::Kind::NegProximity, x0 + closest.t, closest.distance);
    }

    if (si > 0) {
      const Quadratic& left = v.segments[si - 1];
      const double left_len = x0 - v.breakpoints[si - 1];
      const double slope_l = left.slope(left_len);
      const double slope_r = q.slope(0);
      if (slope_l < slope_r - 1e-12) {
        ++rep.kink_violations;
        record(ViscosityViolation::Kind::Kink, x0, slope_l - slope_r);
      }
      const double vl = left.value(left_len);
      const double vr = q.value(0);
      if (std::fabs(vl - vr) > 1e-12 * std::max(1.0, std::fabs(vr))) {
        ++rep.continuity_violations;
        record(ViscosityViolation::Kind::Continuity, x0, vl - vr);
      }
    }
  }
  return rep;
}

ContinuumRun run_continuum(const ContinuumParams& params) {
  require(params.columns >= 2, "continuum: need at least two columns");
  require(params.rows >= 1, "continuum: need at least one row");
  require(params.grid_step_fraction > 0 && params.grid_step_fraction <= 1.0 / 20.0,
          "continuum: grid_step_fraction must lie in (0, 1/20]");
  ContinuumRun run;
  run.scales = select_scales(params.k, params.alpha, params.lambda_plus, params.lambda_minus);
  const ScaleParams& s = run.scales;

  // The window reaches at least one unit beyond every point the graph can
  // visit, so no negative within αρ of the graph is left out.
  run.obstacles = sample_obstacles(obstacle_window(params.columns, params.rows, s), s, params.seed);

  percolation::SiteGrid grid(params.columns, params.rows, 6, s.p0, params.seed);
  std::vector<std::optional<media::Point>> cores(static_cast<std::size_t>(params.columns * params.rows));
  for (std::int64_t i = 0; i < params.columns; ++i) {
    for (std::int64_t j = 1; j <= params.rows; ++j) {
      const SiteClass c = classify_site(i, j, run.obstacles, s);
      grid.set_open(i, j, c.open);
      cores[static_cast<std::size_t>(i * params.rows + (j - 1))] = c.core;
    }
  }
  run.grid = grid;
  run.surface = percolation::minimal_open_surface(grid);
  if (!run.surface) {
    run.status = "no_surface";
    run.detail = "no open Lipschitz surface within " + std::to_string(params.rows) + " rows";
    return run;
  }
  for (std::int64_t i = 0; i < params.columns; ++i) {
    const std::int64_t j = run.surface->phi[static_cast<std::size_t>(i)];
    run.cores.push_back(*cores[static_cast<std::size_t>(i * params.rows + (j - 1))]);
  }
  try {
    run.v = assemble(run.cores, run.obstacles, s);
  } catch (const PinningError& e) {
    if (e.code() != ErrorCode::Infeasible) throw;
    run.status = "infeasible";
    run.detail = e.what();
    return run;
  }
  const double alpha = s.alpha;
  run.report = verify_viscosity(*run.v, run.obstacles, s, s.rho * params.grid_step_fraction,
                                [alpha](double x, double y) { return default_shape(x, y, alpha); });
  run.status = run.report->passed(s) ? "ok" : "verify_failed";
  return run;
}

nlohmann::json scales_to_json(const ScaleParams& s) {
  return {{"k", s.k},         {"alpha", s.alpha}, {"lambda_plus", s.lambda_plus}, {"lambda_minus", s.lambda_minus},
          {"l", s.l},         {"d_gap", s.d_gap}, {"h", s.h},                     {"b", s.b},
          {"N", s.N},         {"rho", s.rho},     {"F_star", s.F_star},           {"S", s.S},
          {"p0", s.p0}};
}

nlohmann::json to_json(const PiecewiseQuadratic& v) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& q : v.segments) segs.push_back({q.a, q.b, q.c});
  nlohmann::json core = nlohmann::json::array();
  for (bool c : v.is_core) core.push_back(c);
  return {{"coefficients", "local"}, {"breakpoints", v.breakpoints}, {"segments", segs},
          {"core", core},            {"F_star", v.F_star},           {"rho", v.rho}};
}

PiecewiseQuadratic piecewise_from_json(const nlohmann::json& j) {
  try {
    PiecewiseQuadratic v;
    if (j.value("coefficients", std::string("local")) != "local") {
      fail(ErrorCode::Io, "piecewise quadratic: only local coefficients are supported");
    }
    v.breakpoints = j.at("breakpoints").get<std::vector<double>>();
    for (const auto& s : j.at("segments")) v.segments.push_back({s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()});
    if (j.contains("core")) {
      for (const auto& c : j.at("core")) v.is_core.push_back(c.get<bool>());
    } else {
      v.is_core.assign(v.segments.size(), false);
    }
    v.F_star = j.at("F_star").get<double>();
    v.rho = j.at("rho").get<double>();
    if (v.breakpoints.size() != v.segments.size() + 1 || v.is_core.size() != v.segments.size()) {
      fail(ErrorCode::Io, "piecewise quadratic: inconsistent sizes");
    }
    return v;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Io, std::string("piecewise quadratic: ") + e.what());
  }
}

nlohmann::json to_json(const ViscosityReport& r) {
  auto kind_name = [](ViscosityViolation::Kind k) {
    switch (k) {
      case ViscosityViolation::Kind::Residual: return "residual";
      case ViscosityViolation::Kind::NegProximity: return "neg_proximity";
      case ViscosityViolation::Kind::Kink: return "kink";
      case ViscosityViolation::Kind::Continuity: return "continuity";
    }
    return "unknown";
  };
  nlohmann::json list = nlohmann::json::array();
  for (const auto& v : r.violations) list.push_back({{"kind", kind_name(v.kind)}, {"x", v.x}, {"value", v.value}});
  auto finite_or_null = [](double x) -> nlohmann::json { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); };
  return {{"max_residual", finite_or_null(r.max_residual)},
          {"residual_violations", r.residual_violations},
          {"kink_violations", r.kink_violations},
          {"continuity_violations", r.continuity_violations},
          {"min_v", finite_or_null(r.min_v)},
          {"min_neg_clearance", finite_or_null(r.min_neg_clearance)},
          {"samples", r.samples},
          {"violations", list}};
}

void write_obstacles_csv(std::ostream& os, const ObstacleSet& obstacles) {
  os << "x,y,sign\n" << std::setprecision(17);
  for (const auto& p : obstacles.positives) os << p.x << ',' << p.y << ",1\n";
  for (const auto& p : obstacles.negatives) os << p.x << ',' << p.y << ",-1\n";
}

}  // namespace pinning::continuum
