#include <doctest.h>

#include <cmath>

#include "pinning/discrete_dynamics.hpp"
#include "pinning/error.hpp"

using namespace pinning;
using namespace pinning::dynamics;
using media::DistributionSpec;
using media::SeededField;

namespace {

DistributionSpec bernoulli(const char* p) { return DistributionSpec::plus_minus_one(Rational::parse(p)); }

discrete::SupersolutionPath flat_path(std::int64_t W) {
  discrete::SupersolutionPath p;
  p.half_width = W;
  p.v.assign(static_cast<std::size_t>(2 * W + 1), 0);
  p.v_bar.assign(static_cast<std::size_t>(2 * W + 3), 0);
  p.argmax_m.assign(static_cast<std::size_t>(2 * W + 1), 0);
  return p;
}

// Mirrors the state, recomputes the rate before every jump and checks the
// sign discipline; with a barrier it also checks that no site sitting on
// the barrier ever jumps up.
class Auditor : public Observer {
 public:
  Auditor(const SeededField& field, std::int64_t F, const RateRule& rule,
          const discrete::SupersolutionPath* barrier = nullptr)
      : field_(field), F_(F), rule_(rule), barrier_(barrier) {}

  void on_start(const InterfaceState& s) override { mirror_ = s; }
  void on_event(const JumpEvent& ev, const InterfaceState& s) override {
    const double rate = rate_at(mirror_, field_, ev.site, F_, rule_);
    if (rate != ev.rate) ++rate_mismatch;
    if (ev.to == ev.from + 1 && !(rate > 0)) ++sign_errors;
    if (ev.to == ev.from - 1 && !(rate < 0)) ++sign_errors;
    if (std::abs(ev.to - ev.from) != 1) ++sign_errors;
    if (mirror_.u[ev.site] != ev.from) ++state_errors;
    if (ev.time < mirror_.time) ++time_errors;
    if (barrier_ && ev.to > ev.from) {
      const std::int64_t col = static_cast<std::int64_t>(ev.site) + mirror_.column_offset;
      if (mirror_.u[ev.site] == barrier_->value(col)) ++barrier_pushes;
    }
    mirror_.u[ev.site] = ev.to;
    mirror_.time = ev.time;
    if (mirror_.u != s.u) ++state_errors;
  }

  int rate_mismatch = 0, sign_errors = 0, state_errors = 0, time_errors = 0, barrier_pushes = 0;

 private:
  const SeededField& field_;
  std::int64_t F_;
  const RateRule& rule_;
  const discrete::SupersolutionPath* barrier_;
  InterfaceState mirror_;
};

}  // namespace

TEST_CASE("default rate rule") {
  const RateRule rule = RateRule::default_bounded();
  CHECK(lambda_eval(rule, 0) == 0.0);
  CHECK(lambda_eval(rule, 3) == 0.875);
  CHECK(lambda_eval(rule, -1) == -0.5);
  CHECK(lambda_eval(rule, 4) == 0.9375);
  for (std::int64_t x = -53; x < 53; ++x) CHECK(rule(x) < rule(x + 1));
  for (std::int64_t x : {-100000, -60, 60, 1 << 30}) CHECK(std::fabs(rule(x)) <= 1.0);
  CHECK(rule(-5000) == -rule(5000));
}

TEST_CASE("user rate tables") {
  const RateRule t = RateRule::user_table({{-2, -0.7}, {-1, -0.3}, {0, 0.0}, {1, 0.2}, {2, 0.9}});
  CHECK(t(1) == 0.2);
  CHECK(t(-2) == -0.7);
  try {
    (void)t(3);
    FAIL("expected an out-of-table error");
  } catch (const PinningError& e) {
    CHECK(e.code() == ErrorCode::Unsupported);
  }
  CHECK_THROWS_AS(RateRule::user_table({{-1, -0.3}, {0, 0.1}, {1, 0.2}}), PinningError);
  CHECK_THROWS_AS(RateRule::user_table({{-1, -0.3}, {1, 0.2}}), PinningError);
  CHECK_THROWS_AS(RateRule::user_table({{-1, 0.3}, {0, 0.0}, {1, 0.2}}), PinningError);
}

TEST_CASE("rate at a site") {
  const SeededField one(1, DistributionSpec::point_mass(1));
  const SeededField zero(1, DistributionSpec::point_mass(0));
  const SeededField minus(1, DistributionSpec::point_mass(-1));
  const RateRule rule = RateRule::default_bounded();
  InterfaceState flat{{0, 0, 0, 0}, 0, 0};
  CHECK(rate_at(flat, one, 1, 0, rule) == -0.5);
  CHECK(rate_at(flat, zero, 1, 0, rule) == 0.0);
  InterfaceState bent{{1, 0, 1, 0}, 0, 0};
  CHECK(bent.laplacian(1) == 2);
  CHECK(rate_at(bent, minus, 1, 1, rule) == 0.9375);

  const DistributionSpec holes({{ExtInt(0), Rational(1, 2)}, {ExtInt::minus_infinity(), Rational(1, 2)}});
  const SeededField field(1, holes);
  bool found = false;
  for (std::int64_t col = 0; col < 100 && !found; ++col) {
    if (field(col, 0).is_finite()) continue;
    found = true;
    InterfaceState s{{0, 0, 0}, 0, col - 1};
    try {
      (void)rate_at(s, field, 1, 0, rule);
      FAIL("expected Unsupported");
    } catch (const PinningError& e) {
      CHECK(e.code() == ErrorCode::Unsupported);
    }
  }
  CHECK(found);
}

TEST_CASE("zero field never moves") {
  SimulationParams p;
  p.width = 32;
  p.horizon = 50;
  const auto tr = simulate(SeededField(1, DistributionSpec::point_mass(0)), p);
  CHECK(tr.jump_count == 0);
  CHECK(tr.final_u == std::vector<std::int64_t>(32, 0));
  CHECK(tr.status == RunStatus::Completed);
}

TEST_CASE("strong obstacles keep the interface down") {
  const SeededField field(1, DistributionSpec::point_mass(10));
  const auto path = flat_path(40);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SimulationParams p;
    p.width = 64;
    p.horizon = 100;
    p.seed = seed;
    ComparisonObserver cmp(path, p.offset(), p.width);
    Observer* obs[] = {&cmp};
    const auto tr = simulate(field, p, obs);
    CHECK(tr.max_height <= 0);
    CHECK(tr.jump_count > 0);
    CHECK(cmp.result().ok);
  }
}

TEST_CASE("negative obstacles push the interface up") {
  const SeededField field(1, DistributionSpec::point_mass(-1));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SimulationParams p;
    p.width = 64;
    p.horizon = 1000;
    p.seed = seed;
    const auto tr = simulate(field, p);
    CHECK(tr.status == RunStatus::Completed);
    CHECK(tr.sup_height_until(1000) > 10);
  }
}

TEST_CASE("flat barrier over a pushing field is violated at the first upward jump") {
  const SeededField field(1, DistributionSpec::point_mass(-1));
  const auto path = flat_path(40);
  SimulationParams p;
  p.width = 64;
  p.horizon = 10;
  p.record_events = true;
  ComparisonObserver cmp(path, p.offset(), p.width);
  Observer* obs[] = {&cmp};
  const auto tr = simulate(field, p, obs);
  REQUIRE_FALSE(cmp.result().ok);
  REQUIRE(!tr.events.empty());
  const auto& first = tr.events.front();
  CHECK(first.to == 1);
  CHECK(cmp.result().first_violation->first == first.time);
  CHECK(cmp.result().first_violation->second == first.site);
  const ComparisonResult replay = check_comparison(tr, path);
  CHECK_FALSE(replay.ok);
  CHECK(replay.first_violation == cmp.result().first_violation);
}

TEST_CASE("rates, signs and state stay consistent at every event") {
  for (const char* p : {"0.3", "0.5", "0.7"}) {
    for (std::int64_t F : {-1, 0, 1}) {
      const SeededField field(77, bernoulli(p));
      SimulationParams sp;
      sp.width = 40;
      sp.horizon = 30;
      sp.F = F;
      sp.seed = 5;
      Auditor audit(field, F, sp.rule);
      Observer* obs[] = {&audit};
      const auto tr = simulate(field, sp, obs);
      CHECK(tr.jump_count > 0);
      CHECK(audit.rate_mismatch == 0);
      CHECK(audit.sign_errors == 0);
      CHECK(audit.state_errors == 0);
      CHECK(audit.time_errors == 0);
    }
  }
}

TEST_CASE("supersolution barriers are never crossed") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const SeededField field(seed, bernoulli("0.6"));
    const auto path = discrete::construct_supersolution(field, 20, 0, 80);
    SimulationParams sp;
    sp.width = 128;
    sp.horizon = 200;
    sp.seed = seed;
    sp.record_events = true;
    Auditor audit(field, 0, sp.rule, &path);
    ComparisonObserver cmp(path, sp.offset(), sp.width);
    Observer* obs[] = {&audit, &cmp};
    const auto tr = simulate(field, sp, obs);
    CHECK(cmp.result().ok);
    CHECK(check_comparison(tr, path).ok);
    CHECK(audit.barrier_pushes == 0);
  }
}

TEST_CASE("sign pattern at the start does not depend on the rule") {
  std::map<std::int64_t, double> table;
  for (std::int64_t x = -30; x <= 30; ++x) table[x] = std::atan(0.3 * static_cast<double>(x));
  const RateRule other = RateRule::user_table(table);
  const RateRule def = RateRule::default_bounded();
  for (const char* p : {"0.2", "0.5", "0.9"}) {
    const SeededField field(3, bernoulli(p));
    InterfaceState s{std::vector<std::int64_t>(50, 0), 0, -25};
    for (std::int64_t F : {-2, 0, 1, 3}) {
      for (std::size_t i = 0; i < 50; ++i) {
        CHECK((rate_at(s, field, i, F, def) > 0) == (rate_at(s, field, i, F, other) > 0));
        CHECK((rate_at(s, field, i, F, def) < 0) == (rate_at(s, field, i, F, other) < 0));
      }
    }
  }
}

TEST_CASE("first jump time is exponential with the total rate") {
  // f ≡ 1 at u ≡ 0: every site fires downward at rate 0.5.
  const SeededField field(1, DistributionSpec::point_mass(1));
  const int runs = 4000;
  const std::size_t width = 8;
  double sum = 0, sum2 = 0;
  std::vector<int> sites(width, 0);
  for (int r = 0; r < runs; ++r) {
    SimulationParams sp;
    sp.width = width;
    sp.horizon = 100;
    sp.seed = static_cast<std::uint64_t>(r);
    sp.record_events = true;
    sp.jump_budget = 1;
    const auto tr = simulate(field, sp);
    REQUIRE(tr.events.size() == 1);
    const double t = tr.events[0].time;
    sum += t;
    sum2 += t * t;
    ++sites[tr.events[0].site];
    CHECK(tr.events[0].to == -1);
  }
  const double mean = sum / runs;
  const double expected = 1.0 / (0.5 * static_cast<double>(width));
  CHECK(std::fabs(mean - expected) <= 4 * expected / std::sqrt(double(runs)));
  CHECK(sum2 / runs == doctest::Approx(2 * expected * expected).epsilon(0.1));
  for (int c : sites) CHECK(std::fabs(c - runs / double(width)) <= 4 * std::sqrt(runs / double(width)));
}

TEST_CASE("determinism and budgets") {
  const SeededField field(9, bernoulli("0.5"));
  SimulationParams sp;
  sp.width = 30;
  sp.horizon = 20;
  sp.seed = 4;
  sp.record_events = true;
  const auto a = simulate(field, sp);
  const auto b = simulate(field, sp);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t k = 0; k < a.events.size(); ++k) {
    CHECK(a.events[k].time == b.events[k].time);
    CHECK(a.events[k].site == b.events[k].site);
  }
  CHECK(a.final_u == b.final_u);
  sp.seed = 5;
  CHECK(simulate(field, sp).final_u != a.final_u);

  sp.jump_budget = 10;
  const auto cut = simulate(field, sp);
  CHECK(cut.status == RunStatus::JumpBudgetExhausted);
  CHECK(cut.jump_count == 10);

  SimulationParams bad;
  bad.horizon = 0;
  CHECK_THROWS_AS(simulate(field, bad), PinningError);
}

TEST_CASE("series and summary document") {
  const SeededField field(2, bernoulli("0.4"));
  SimulationParams sp;
  sp.width = 16;
  sp.horizon = 10;
  sp.series_interval = 1;
  const auto tr = simulate(field, sp);
  REQUIRE(tr.series.size() >= 10);
  std::int64_t sup = std::numeric_limits<std::int64_t>::min();
  for (const auto& s : tr.series) {
    sup = std::max(sup, s.max_height);
    CHECK(s.sup_height >= sup);
  }
  CHECK(tr.sup_height_until(10) == tr.max_height);
  const auto doc = trajectory_summary(tr, 3, {{"F", 0}}, ComparisonResult{});
  CHECK(doc.at("seed") == 3);
  CHECK(doc.at("comparison") == "ok");
  CHECK(doc.at("jump_count") == tr.jump_count);
  CHECK(doc.at("max_height_series").size() == tr.series.size());
  CHECK(trajectory_summary(tr, 3, {}, std::nullopt).at("comparison").is_null());
}
