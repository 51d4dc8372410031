#include "pinning/discrete_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pinning::dynamics {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Binary min-heap over site indices keyed by next firing time, with position
// lookup so clocks can be updated or removed in O(log n).
class ClockQueue {
 public:
  explicit ClockQueue(std::size_t n) : pos_(n, kNone), key_(n, 0.0) {}

  bool empty() const { return heap_.empty(); }
  std::size_t top() const { return heap_.front(); }
  double top_time() const { return key_[heap_.front()]; }
  std::size_t size() const { return heap_.size(); }
  bool contains(std::size_t s) const { return pos_[s] != kNone; }

  void set(std::size_t s, double t) {
    key_[s] = t;
    if (pos_[s] == kNone) {
      pos_[s] = heap_.size();
      heap_.push_back(s);
      sift_up(pos_[s]);
    } else {
      sift_up(pos_[s]);
      sift_down(pos_[s]);
    }
  }

  void erase(std::size_t s) {
    const std::size_t p = pos_[s];
    if (p == kNone) return;
    swap_at(p, heap_.size() - 1);
    heap_.pop_back();
    pos_[s] = kNone;
    if (p < heap_.size()) {
      sift_up(p);
      sift_down(p);
    }
  }

 private:
  bool less(std::size_t a, std::size_t b) const {
    // Ties broken by site index for determinism.
    return key_[heap_[a]] < key_[heap_[b]] ||
           (key_[heap_[a]] == key_[heap_[b]] && heap_[a] < heap_[b]);
  }
  void swap_at(std::size_t a, std::size_t b) {
    std::swap(heap_[a], heap_[b]);
    pos_[heap_[a]] = a;
    pos_[heap_[b]] = b;
  }
  void sift_up(std::size_t p) {
    while (p > 0) {
      const std::size_t parent = (p - 1) / 2;
      if (!less(p, parent)) break;
      swap_at(p, parent);
      p = parent;
    }
  }
  void sift_down(std::size_t p) {
    for (;;) {
      const std::size_t l = 2 * p + 1;
      const std::size_t r = l + 1;
      std::size_t best = p;
      if (l < heap_.size() && less(l, best)) best = l;
      if (r < heap_.size() && less(r, best)) best = r;
      if (best == p) return;
      swap_at(p, best);
      p = best;
    }
  }

  std::vector<std::size_t> heap_;
  std::vector<std::size_t> pos_;
  std::vector<double> key_;
};

const char* status_name(RunStatus s) {
  return s == RunStatus::Completed ? "completed" : "jump_budget_exhausted";
}

}  // namespace

RateRule RateRule::user_table(std::map<std::int64_t, double> table) {
  auto zero = table.find(0);
  require(zero != table.end() && zero->second == 0.0, "rate table must map 0 to 0");
  double prev = -std::numeric_limits<double>::infinity();
  for (const auto& [x, y] : table) {
    require(std::isfinite(y), "rate table values must be finite");
    require(y > prev, "rate table must be strictly increasing (at " + std::to_string(x) + ")");
    prev = y;
  }
  RateRule r;
  r.kind_ = Kind::UserTable;
  r.table_ = std::move(table);
  return r;
}

double RateRule::operator()(std::int64_t x) const {
  if (kind_ == Kind::DefaultBounded) {
    if (x == 0) return 0.0;
    // 2^{-|x|} underflows to zero well before |x| = 1100.
    const std::int64_t a = x > 0 ? std::min<std::int64_t>(x, 1100) : (x < -1100 ? 1100 : -x);
    const double mag = 1.0 - std::ldexp(1.0, -static_cast<int>(a));
    return x > 0 ? mag : -mag;
  }
  auto it = table_.find(x);
  if (it == table_.end()) {
    fail(ErrorCode::Unsupported, "rate table has no entry for " + std::to_string(x));
  }
  return it->second;
}

double rate_at(const InterfaceState& state, const media::SeededField& field, std::size_t i,
               std::int64_t F, const RateRule& rule) {
  const std::int64_t column = static_cast<std::int64_t>(i) + state.column_offset;
  const ExtInt f = field(column, state.u[i]);
  if (f.is_minus_infinity()) {
    fail(ErrorCode::Unsupported, "dynamics: obstacle strength −∞ at (" + std::to_string(column) + ", " +
                                     std::to_string(state.u[i]) + ")");
  }
  return rule(state.laplacian(i) - f.value() + F);
}

std::int64_t Trajectory::sup_height_until(double t) const {
  std::int64_t best = 0;
  for (const auto& p : series) {
    if (p.t > t) break;
    best = p.sup_height;
  }
  return best;
}

Trajectory simulate(const media::SeededField& field, const SimulationParams& params,
                    std::span<Observer* const> observers) {
  require(params.width >= 3, "simulate: width must be at least 3");
  require(params.horizon > 0 && std::isfinite(params.horizon), "simulate: horizon must be positive");
  require(params.jump_budget >= 1, "simulate: jump budget must be positive");
  if (!field.spec->minus_infinity_mass().is_zero()) {
    fail(ErrorCode::Unsupported, "simulate: obstacle law with mass at −∞ is not supported by the dynamics");
  }
  const std::size_t n = params.width;
  const double interval = params.series_interval > 0 ? params.series_interval : params.horizon / 100.0;

  InterfaceState state;
  state.u.assign(n, 0);
  state.column_offset = params.offset();

  Trajectory traj;
  traj.initial_u = state.u;
  traj.column_offset = state.column_offset;

  // Height histogram for O(log n) maximum tracking.
  std::map<std::int64_t, std::size_t> heights{{0, n}};
  std::int64_t sup_height = 0;

  std::vector<double> rate(n, 0.0);
  ClockQueue clocks(n);
  std::uint64_t draws = 0;
  auto exp_draw = [&](double r) {
    const double u = rng::to_unit_open0(rng::bits64(params.seed, rng::Stream::Dynamics, draws++, 0));
    return -std::log(u) / std::fabs(r);
  };
  auto reschedule = [&](std::size_t s, double now) {
    rate[s] = rate_at(state, field, s, params.F, params.rule);
    if (rate[s] == 0.0) {
      clocks.erase(s);
    } else {
      clocks.set(s, now + exp_draw(rate[s]));
    }
  };

  for (std::size_t s = 0; s < n; ++s) reschedule(s, 0.0);
  for (Observer* o : observers) o->on_start(state);

  std::size_t next_sample = 0;
  auto sample_until = [&](double t_limit) {
    for (;;) {
      const double ts = static_cast<double>(next_sample) * interval;
      if (ts > t_limit || ts > params.horizon) break;
      traj.series.push_back({ts, heights.rbegin()->first, sup_height});
      ++next_sample;
    }
  };

  while (!clocks.empty()) {
    const double t = clocks.top_time();
    if (t > params.horizon) break;
    const std::size_t i = clocks.top();
    // Samples strictly before the event see the pre-jump state.
    sample_until(std::nextafter(t, -std::numeric_limits<double>::infinity()));

    const double r = rate[i];
    const std::int64_t from = state.u[i];
    const std::int64_t to = r > 0 ? from + 1 : from - 1;
    state.u[i] = to;
    state.time = t;
    ++traj.jump_count;

    if (--heights[from] == 0) heights.erase(from);
    ++heights[to];
    sup_height = std::max(sup_height, to);

    const JumpEvent ev{t, i, from, to, r};
    for (Observer* o : observers) o->on_event(ev, state);
    if (params.record_events) traj.events.push_back(ev);

    reschedule((i + n - 1) % n, t);
    reschedule(i, t);
    reschedule((i + 1) % n, t);

    if (traj.jump_count >= params.jump_budget) {
      traj.status = RunStatus::JumpBudgetExhausted;
      break;
    }
  }

  if (traj.status == RunStatus::Completed) {
    state.time = params.horizon;
    sample_until(params.horizon);
  }
  traj.final_u = state.u;
  traj.final_time = state.time;
  traj.max_height = sup_height;
  return traj;
}

ComparisonObserver::ComparisonObserver(const discrete::SupersolutionPath& path, std::int64_t column_offset,
                                       std::size_t width)
    : path_(path), offset_(column_offset) {
  const std::int64_t lo = column_offset;
  const std::int64_t hi = column_offset + static_cast<std::int64_t>(width) - 1;
  require(lo >= -path.half_width && hi <= path.half_width,
          "comparison: barrier does not cover the simulation window");
}

void ComparisonObserver::on_start(const InterfaceState& state) {
  for (std::size_t i = 0; i < state.width(); ++i) {
    if (state.u[i] > path_.value(static_cast<std::int64_t>(i) + offset_)) {
      fail(ErrorCode::InvalidArgument, "comparison: initial state is not below the barrier");
    }
  }
}

void ComparisonObserver::on_event(const JumpEvent& ev, const InterfaceState&) {
  if (!result_.ok) return;
  if (ev.to > path_.value(static_cast<std::int64_t>(ev.site) + offset_)) {
    result_.ok = false;
    result_.first_violation = std::make_pair(ev.time, ev.site);
  }
}

ComparisonResult check_comparison(const Trajectory& trajectory, const discrete::SupersolutionPath& path) {
  require(trajectory.jump_count == 0 || !trajectory.events.empty(),
          "check_comparison: trajectory was recorded without events");
  ComparisonObserver obs(path, trajectory.column_offset, trajectory.initial_u.size());
  InterfaceState state;
  state.u = trajectory.initial_u;
  state.column_offset = trajectory.column_offset;
  obs.on_start(state);
  for (const auto& ev : trajectory.events) {
    state.u[ev.site] = ev.to;
    state.time = ev.time;
    obs.on_event(ev, state);
    if (!obs.result().ok) break;
  }
  return obs.result();
}

nlohmann::json trajectory_summary(const Trajectory& trajectory, std::uint64_t seed,
                                  const nlohmann::json& params,
                                  const std::optional<ComparisonResult>& comparison) {
  nlohmann::json series = nlohmann::json::array();
  nlohmann::json sup = nlohmann::json::array();
  for (const auto& p : trajectory.series) {
    series.push_back({p.t, p.max_height});
    sup.push_back({p.t, p.sup_height});
  }
  nlohmann::json doc = {
      {"seed", seed},
      {"params", params},
      {"status", status_name(trajectory.status)},
      {"jump_count", trajectory.jump_count},
      {"final_time", trajectory.final_time},
      {"max_height", trajectory.max_height},
      {"max_height_series", series},
      {"sup_height_series", sup},
  };
  if (!comparison) {
    doc["comparison"] = nullptr;
  } else if (comparison->ok) {
    doc["comparison"] = "ok";
  } else {
    doc["comparison"] = {{"violation",
                          {{"t", comparison->first_violation->first},
                           {"i", comparison->first_violation->second}}}};
  }
  return doc;
}

}  // namespace pinning::dynamics
