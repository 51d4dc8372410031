#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "pinning/discrete_pinning.hpp"
#include "pinning/random_media.hpp"

namespace pinning::dynamics {

/// Λ: strictly increasing, bounded, Λ(0) = 0.
class RateRule {
 public:
  enum class Kind { DefaultBounded, UserTable };

  /// sign(x) · (1 − 2^{−|x|}).
  static RateRule default_bounded() { return RateRule(); }
  /// Finite table; must contain 0 ↦ 0 and be strictly increasing. Arguments
  /// outside the table's domain raise Unsupported.
  static RateRule user_table(std::map<std::int64_t, double> table);

  double operator()(std::int64_t x) const;
  Kind kind() const { return kind_; }
  const std::map<std::int64_t, double>& table() const { return table_; }

 private:
  RateRule() = default;
  Kind kind_ = Kind::DefaultBounded;
  std::map<std::int64_t, double> table_;
};

inline double lambda_eval(const RateRule& rule, std::int64_t x) { return rule(x); }

/// Heights on a periodic window of `width` sites. Site i reads obstacle
/// column i + column_offset.
struct InterfaceState {
  std::vector<std::int64_t> u;
  double time = 0;
  std::int64_t column_offset = 0;

  std::size_t width() const { return u.size(); }
  std::int64_t laplacian(std::size_t i) const {
    const std::size_t n = u.size();
    return u[(i + 1) % n] + u[(i + n - 1) % n] - 2 * u[i];
  }
};

/// λ = Λ(Δ₁u(i) − f(i, u(i)) + F). Throws Unsupported when f(i, u(i)) = −∞.
double rate_at(const InterfaceState& state, const media::SeededField& field, std::size_t i,
               std::int64_t F, const RateRule& rule);

struct JumpEvent {
  double time = 0;
  std::size_t site = 0;
  std::int64_t from = 0;
  std::int64_t to = 0;
  double rate = 0;  // signed rate that fired
};

class Observer {
 public:
  virtual ~Observer() = default;
  virtual void on_start(const InterfaceState&) {}
  /// Called after the jump has been applied to `state`.
  virtual void on_event(const JumpEvent& ev, const InterfaceState& state) = 0;
};

struct SimulationParams {
  std::int64_t F = 0;
  RateRule rule = RateRule::default_bounded();
  std::size_t width = 64;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  /// Defaults to −width/2 so the window is centered on column 0.
  std::optional<std::int64_t> column_offset;
  /// Spacing of the downsampled height series; 0 means horizon / 100.
  double series_interval = 0;
  std::int64_t jump_budget = 1'000'000'000;
  bool record_events = false;

  std::int64_t offset() const {
    return column_offset.value_or(-static_cast<std::int64_t>(width / 2));
  }
};

enum class RunStatus { Completed, JumpBudgetExhausted };

struct SeriesPoint {
  double t = 0;
  std::int64_t max_height = 0;  // max_i u_t(i)
  std::int64_t sup_height = 0;  // sup over [0, t] of the above
};

struct Trajectory {
  std::vector<std::int64_t> initial_u;
  std::vector<std::int64_t> final_u;
  std::int64_t column_offset = 0;
  double final_time = 0;
  std::int64_t jump_count = 0;
  std::int64_t max_height = 0;  // sup over the whole run
  std::vector<SeriesPoint> series;
  RunStatus status = RunStatus::Completed;
  std::vector<JumpEvent> events;  // only with record_events

  /// sup_{s ≤ t} max_i u_s(i), read from the series (t must be a sample time
  /// or later than the last one).
  std::int64_t sup_height_until(double t) const;
};

/// Event-driven simulation from u₀ ≡ 0: every site with nonzero rate carries
/// an exponential clock; after a jump the clocks of the site and both
/// neighbours are redrawn from their new rates. Deterministic given the seed.
Trajectory simulate(const media::SeededField& field, const SimulationParams& params,
                    std::span<Observer* const> observers = {});

struct ComparisonResult {
  bool ok = true;
  std::optional<std::pair<double, std::size_t>> first_violation;  // (t, site)
};

/// Online form: tracks u_t(i) ≤ v(i + column_offset) at every event.
class ComparisonObserver : public Observer {
 public:
  ComparisonObserver(const discrete::SupersolutionPath& path, std::int64_t column_offset,
                     std::size_t width);
  void on_start(const InterfaceState& state) override;
  void on_event(const JumpEvent& ev, const InterfaceState& state) override;
  const ComparisonResult& result() const { return result_; }

 private:
  const discrete::SupersolutionPath& path_;
  std::int64_t offset_;
  ComparisonResult result_;
};

/// Replays a recorded trajectory (record_events = true) against the barrier.
ComparisonResult check_comparison(const Trajectory& trajectory, const discrete::SupersolutionPath& path);

/// One summary document per run.
nlohmann::json trajectory_summary(const Trajectory& trajectory, std::uint64_t seed,
                                  const nlohmann::json& params,
                                  const std::optional<ComparisonResult>& comparison);

}  // namespace pinning::dynamics
