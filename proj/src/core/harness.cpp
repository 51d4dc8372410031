#include "pinning/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>
#include <variant>

#include <openssl/evp.h>

#include "pinning/continuum.hpp"
#include "pinning/discrete_dynamics.hpp"
#include "pinning/discrete_pinning.hpp"
#include "pinning/error.hpp"
#include "pinning/lipschitz.hpp"
#include "pinning/random_media.hpp"
#include "pinning/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pinning::harness {

namespace {

constexpr const char* kSchemaLine = "# schema=1";

// ---------------------------------------------------------------------------
// Field-level config reading

class Reader {
 public:
  Reader(const json& obj, std::string prefix, std::vector<std::string>& errors)
      : obj_(obj), prefix_(std::move(prefix)), errors_(errors) {
    if (!obj_.is_object()) error("", "must be an object");
  }

  void error(const std::string& key, const std::string& msg) {
    std::string field = prefix_;
    if (!key.empty()) field += (field.empty() ? "" : ".") + key;
    errors_.push_back(field + ": " + msg);
  }

  const json* raw(const std::string& key) {
    known_.push_back(key);
    if (!obj_.is_object()) return nullptr;
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::int64_t integer(const std::string& key, std::optional<std::int64_t> def, std::int64_t lo, std::int64_t hi) {
    const json* v = raw(key);
    if (!v) {
      if (!def) error(key, "required");
      return def.value_or(lo);
    }
    std::int64_t out = 0;
    bool ok = false;
    if (v->is_number_integer()) {
      out = v->get<std::int64_t>();
      ok = true;
    } else if (v->is_string()) {
      const std::string s = v->get<std::string>();
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      ok = ec == std::errc() && p == s.data() + s.size() && !s.empty();
    }
    if (!ok) {
      error(key, "must be an integer");
      return def.value_or(lo);
    }
    if (out < lo || out > hi) {
      error(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return def.value_or(lo);
    }
    return out;
  }

  double real(const std::string& key, std::optional<double> def, double lo, double hi, bool lo_open = false) {
    const json* v = raw(key);
    if (!v) {
      if (!def) error(key, "required");
      return def.value_or(lo);
    }
    double out = 0;
    bool ok = false;
    if (v->is_number()) {
      out = v->get<double>();
      ok = true;
    } else if (v->is_string()) {
      const std::string s = v->get<std::string>();
      char* end = nullptr;
      out = std::strtod(s.c_str(), &end);
      ok = !s.empty() && end == s.c_str() + s.size();
    }
    if (!ok || !std::isfinite(out)) {
      error(key, "must be a finite number");
      return def.value_or(lo);
    }
    if (out < lo || out > hi || (lo_open && out == lo)) {
      std::ostringstream os;
      os << "must lie in " << (lo_open ? "(" : "[") << lo << ", " << hi << "]";
      error(key, os.str());
      return def.value_or(lo);
    }
    return out;
  }

  bool flag(const std::string& key, bool def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_boolean()) {
      error(key, "must be true or false");
      return def;
    }
    return v->get<bool>();
  }

  void finish() {
    if (!obj_.is_object()) return;
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (std::find(known_.begin(), known_.end(), it.key()) == known_.end()) error(it.key(), "unknown field");
    }
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::vector<std::string>& errors_;
  std::vector<std::string> known_;
};

using DistPtr = std::shared_ptr<const media::DistributionSpec>;

DistPtr read_distribution(Reader& r) {
  const json* v = r.raw("distribution");
  if (!v) {
    r.error("distribution", "required");
    return nullptr;
  }
  try {
    return std::make_shared<const media::DistributionSpec>(media::distribution_from_json(*v));
  } catch (const PinningError& e) {
    r.error("distribution", e.what());
    return nullptr;
  }
}

struct BuildParams {
  DistPtr dist;
  std::int64_t F = 0;
  std::int64_t half_width = 0;
  std::int64_t n_start = 0;
  std::int64_t vertical_budget = 0;
};

struct SimulateParams {
  DistPtr dist;
  std::int64_t F = 0;
  std::int64_t width = 0;
  double horizon = 0;
  std::int64_t n_start = 0;
  std::int64_t half_width = 0;
  std::optional<dynamics::RateRule> rule;
  double series_interval = 0;
  std::int64_t jump_budget = 0;
  bool compare = true;
  json rule_json;
};

struct AlphaParams {
  DistPtr dist;
  std::int64_t samples = 0;
  std::int64_t depth = 0;
  std::int64_t F = 0;
  bool exact = true;
};

struct PercolationParams {
  std::int64_t width = 0;
  std::int64_t height = 0;
  double p = 0;
  std::int64_t d = 1;
};

using TaskParams = std::variant<BuildParams, SimulateParams, AlphaParams, PercolationParams, continuum::ContinuumParams>;

constexpr std::int64_t kBig = std::int64_t{1} << 40;

TaskParams parse_params(Kind kind, const json& params, const std::string& prefix, std::vector<std::string>& errors) {
  Reader r(params, prefix, errors);
  TaskParams out;
  switch (kind) {
    case Kind::DiscreteBuild: {
      BuildParams p;
      p.dist = read_distribution(r);
      p.F = r.integer("F", 0, -kBig, kBig);
      p.half_width = r.integer("half_width", 1000, 2, 100'000'000);
      p.n_start = r.integer("n_start", 0, 0, kBig);
      p.vertical_budget = r.integer("vertical_budget", std::int64_t{1} << 22, 1, kBig);
      out = p;
      break;
    }
    case Kind::DiscreteSimulate: {
      SimulateParams p;
      p.dist = read_distribution(r);
      p.F = r.integer("F", 0, -kBig, kBig);
      p.width = r.integer("width", 64, 3, 10'000'000);
      p.horizon = r.real("horizon", 100.0, 0.0, 1e12, true);
      p.n_start = r.integer("n_start", 200, 0, kBig);
      p.half_width = r.integer("half_width", p.width / 2 + 1, 2, 100'000'000);
      if (p.half_width < p.width / 2 + 1) r.error("half_width", "barrier must cover the window (>= width/2 + 1)");
      p.series_interval = r.real("series_interval", 0.0, 0.0, 1e12);
      p.jump_budget = r.integer("jump_budget", 1'000'000'000, 1, kBig);
      p.compare = r.flag("compare", true);
      const json* rule = r.raw("rule");
      if (!rule || (rule->is_string() && rule->get<std::string>() == "default")) {
        p.rule = dynamics::RateRule::default_bounded();
        p.rule_json = "default";
      } else if (rule->is_object() && rule->contains("table") && (*rule)["table"].is_object()) {
        std::map<std::int64_t, double> table;
        bool ok = true;
        for (auto it = (*rule)["table"].begin(); it != (*rule)["table"].end(); ++it) {
          std::int64_t x = 0;
          const std::string& key = it.key();
          auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), x);
          if (ec != std::errc() || ptr != key.data() + key.size() || !it.value().is_number()) {
            r.error("rule.table", "entries must map integer strings to numbers");
            ok = false;
            break;
          }
          table[x] = it.value().get<double>();
        }
        if (ok) {
          try {
            p.rule = dynamics::RateRule::user_table(table);
            p.rule_json = *rule;
          } catch (const PinningError& e) {
            r.error("rule.table", e.what());
          }
        }
      } else {
        r.error("rule", "must be \"default\" or {\"table\": {...}}");
      }
      out = p;
      break;
    }
    case Kind::AlphaEstimate: {
      AlphaParams p;
      p.dist = read_distribution(r);
      p.samples = r.integer("samples", 100'000, 2, kBig);
      p.depth = r.integer("depth", 64, 0, 100'000);
      p.F = r.integer("F", 0, -kBig, kBig);
      p.exact = r.flag("exact", true);
      out = p;
      break;
    }
    case Kind::Percolation: {
      PercolationParams p;
      p.width = r.integer("width", 100, 1, 10'000'000);
      p.height = r.integer("height", 50, 1, 10'000'000);
      p.p = r.real("p", std::nullopt, 0.0, 1.0);
      p.d = r.integer("d", 1, 1, 10'000'000);
      if (p.width * p.height > 500'000'000) r.error("width", "grid too large (width * height > 5e8)");
      out = p;
      break;
    }
    case Kind::ContinuumBuild: {
      continuum::ContinuumParams p;
      p.k = r.real("k", 1.0, 0.0, 1.0, true);
      p.alpha = r.real("alpha", 1.6, std::sqrt(2.0), 1e6, true);
      p.lambda_plus = r.real("lambda_plus", 1.0, 0.0, 1e6, true);
      p.lambda_minus = r.real("lambda_minus", 0.01, 0.0, 1e6, true);
      p.columns = r.integer("columns", 50, 2, 100'000);
      p.rows = r.integer("rows", 8, 1, 100'000);
      p.grid_step_fraction = r.real("grid_step_fraction", 1.0 / 20.0, 0.0, 1.0 / 20.0, true);
      out = p;
      break;
    }
    case Kind::Sweep:
      r.error("", "sweep cannot be nested");
      break;
  }
  r.finish();
  return out;
}

// ---------------------------------------------------------------------------
// Output helpers

std::string fmt(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

std::string cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return fmt(v.get<double>());
  return v.dump();
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) fail(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

template <class F>
void parallel_for(std::size_t n, int jobs, F&& body) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Tasks

struct TaskContext {
  std::uint64_t seed = 0;
  fs::path dir;
  bool svg = false;
  json params;  // as configured, echoed into the run document
};

void write_svg(const fs::path& path, std::span<const plot::Series> series, const plot::Style& style) {
  write_atomic(path, plot::render_svg(series, style));
}

json run_discrete_build(const BuildParams& p, const TaskContext& ctx, json& doc) {
  media::SeededField field(ctx.seed, p.dist);
  discrete::SearchBudget budget{p.vertical_budget};
  const auto path = discrete::construct_supersolution(field, p.n_start, p.F, p.half_width, budget);
  const auto violations = discrete::verify_discrete(path, field, p.F);
  const auto stats = discrete::path_stats(path);
  {
    std::ostringstream os;
    discrete::write_path(os, path);
    write_atomic(ctx.dir / ("path_" + std::to_string(ctx.seed) + ".txt"), os.str());
  }
  if (ctx.svg) {
    plot::Series line{"v", plot::Series::Kind::Line, "path", {}};
    plot::Series marks{"f > 0 below v", plot::Series::Kind::Points, "obstacle", {}};
    const bool show_sites = 2 * p.half_width + 1 <= 2001;
    for (std::int64_t i = -p.half_width; i <= p.half_width; ++i) {
      const double vi = static_cast<double>(path.value(i));
      line.points.emplace_back(static_cast<double>(i), vi);
      if (!show_sites) continue;
      for (std::int64_t j = path.value(i) - 4; j <= path.value(i); ++j) {
        const ExtInt f = field(i, j);
        if (f.is_finite() && f.value() > 0) marks.points.emplace_back(static_cast<double>(i), static_cast<double>(j));
      }
    }
    const std::vector<plot::Series> series{line, marks};
    write_svg(ctx.dir / ("path_" + std::to_string(ctx.seed) + ".svg"), series,
              {"stationary supersolution, seed " + std::to_string(ctx.seed), "i", "v(i)"});
  }
  json row = {{"min_v", stats.min_v},
              {"nonnegative", stats.nonnegative},
              {"forward_slope", stats.forward_slope},
              {"backward_slope", stats.backward_slope},
              {"violations", violations.size()},
              {"v_center", path.value(0)}};
  doc["n_start_effective"] = path.value(0);
  return row;
}

json run_discrete_simulate(const SimulateParams& p, const TaskContext& ctx, json& doc) {
  media::SeededField field(ctx.seed, p.dist);
  const auto path = discrete::construct_supersolution(field, p.n_start, p.F, p.half_width, {});
  dynamics::SimulationParams sp;
  sp.F = p.F;
  sp.rule = *p.rule;
  sp.width = static_cast<std::size_t>(p.width);
  sp.horizon = p.horizon;
  sp.seed = ctx.seed;
  sp.series_interval = p.series_interval;
  sp.jump_budget = p.jump_budget;
  std::optional<dynamics::ComparisonObserver> observer;
  std::vector<dynamics::Observer*> observers;
  if (p.compare) {
    observer.emplace(path, sp.offset(), sp.width);
    observers.push_back(&*observer);
  }
  const auto traj = dynamics::simulate(field, sp, observers);
  std::optional<dynamics::ComparisonResult> cmp;
  if (observer) cmp = observer->result();
  const json summary = dynamics::trajectory_summary(traj, ctx.seed, ctx.params, cmp);
  for (auto it = summary.begin(); it != summary.end(); ++it) doc[it.key()] = it.value();

  if (ctx.svg) {
    plot::Series line{"max_i u_t(i)", plot::Series::Kind::Line, "height", {}};
    for (const auto& s : traj.series) line.points.emplace_back(s.t, static_cast<double>(s.max_height));
    const std::vector<plot::Series> series{line};
    write_svg(ctx.dir / ("height_" + std::to_string(ctx.seed) + ".svg"), series,
              {"interface height, seed " + std::to_string(ctx.seed), "t", "max height"});
  }
  const std::int64_t final_max = *std::max_element(traj.final_u.begin(), traj.final_u.end());
  std::string comparison;
  if (cmp) comparison = cmp->ok ? "ok" : "violated";
  return {{"run_status", traj.status == dynamics::RunStatus::Completed ? "completed" : "jump_budget_exhausted"},
          {"jump_count", traj.jump_count},
          {"final_time", traj.final_time},
          {"max_height", traj.max_height},
          {"final_max_height", final_max},
          {"comparison", comparison}};
}

json run_alpha_estimate(const AlphaParams& p, const TaskContext& ctx, json&) {
  const auto mc = media::mean_max_mc(*p.dist, p.samples, static_cast<int>(p.depth), ctx.seed);
  json row = {{"estimate", mc.estimate}, {"std_error", mc.std_error}, {"exact", nullptr},
              {"exact_error_bound", nullptr}, {"pinning_margin", nullptr}, {"pinning_satisfied", nullptr}};
  if (p.exact) {
    try {
      const auto ex = media::mean_max_exact(*p.dist, static_cast<int>(p.depth));
      row["exact"] = ex.value;
      row["exact_error_bound"] = ex.error_bound;
      const auto pc = media::pinning_condition(*p.dist, p.F, static_cast<int>(p.depth));
      row["pinning_margin"] = pc.margin;
      row["pinning_satisfied"] = pc.satisfied;
    } catch (const PinningError& e) {
      if (e.code() != ErrorCode::BudgetExceeded && e.code() != ErrorCode::Divergent) throw;
    }
  }
  return row;
}

json run_percolation(const PercolationParams& p, const TaskContext& ctx, json&) {
  const auto grid = p.d == 1 ? percolation::generate_grid_iid(p.width, p.height, p.p, ctx.seed)
                             : percolation::generate_grid_blocked(p.width, p.height, p.p, p.d, ctx.seed);
  const auto surface = percolation::minimal_open_surface(grid);
  {
    std::ostringstream os;
    percolation::write_grid(os, grid);
    write_atomic(ctx.dir / ("grid_" + std::to_string(ctx.seed) + ".txt"), os.str());
  }
  {
    std::ostringstream os;
    percolation::write_surface(os, surface);
    write_atomic(ctx.dir / ("surface_" + std::to_string(ctx.seed) + ".txt"), os.str());
  }
  json row = {{"found", surface.has_value()},
              {"min_phi", nullptr},
              {"max_phi", nullptr},
              {"open_fraction",
               static_cast<double>(grid.open_count()) / static_cast<double>(grid.width() * grid.height())}};
  if (surface) {
    const auto [lo, hi] = std::minmax_element(surface->phi.begin(), surface->phi.end());
    row["min_phi"] = *lo;
    row["max_phi"] = *hi;
    if (ctx.svg) {
      plot::Series line{"phi", plot::Series::Kind::Line, "surface", {}};
      for (std::size_t z = 0; z < surface->phi.size(); ++z) {
        line.points.emplace_back(static_cast<double>(z), static_cast<double>(surface->phi[z]));
      }
      const std::vector<plot::Series> series{line};
      write_svg(ctx.dir / ("surface_" + std::to_string(ctx.seed) + ".svg"), series,
                {"minimal open Lipschitz surface, seed " + std::to_string(ctx.seed), "z", "phi(z)"});
    }
  }
  return row;
}

json run_continuum_build(continuum::ContinuumParams p, const TaskContext& ctx, json& doc) {
  p.seed = ctx.seed;
  const auto run = continuum::run_continuum(p);
  const std::string tag = std::to_string(ctx.seed);
  doc["scales"] = continuum::scales_to_json(run.scales);
  doc["outcome"] = run.status;
  doc["detail"] = run.detail;
  if (run.surface) doc["surface"] = run.surface->phi;
  {
    std::ostringstream os;
    os << kSchemaLine << '\n';
    continuum::write_obstacles_csv(os, run.obstacles);
    write_atomic(ctx.dir / ("obstacles_" + tag + ".csv"), os.str());
  }
  json row = {{"outcome", run.status}, {"segments", nullptr},     {"min_v", nullptr},
              {"min_neg_clearance", nullptr}, {"max_residual", nullptr}, {"residual_violations", nullptr},
              {"kink_violations", nullptr}, {"F_star", run.scales.F_star}, {"rho", run.scales.rho}};
  if (run.v) {
    json vj = continuum::to_json(*run.v);
    write_atomic(ctx.dir / ("v_" + tag + ".json"), vj.dump(1) + "\n");
    row["segments"] = run.v->segments.size();
  }
  if (run.report) {
    const json rj = continuum::to_json(*run.report);
    write_atomic(ctx.dir / ("report_" + tag + ".json"), rj.dump(1) + "\n");
    row["min_v"] = rj["min_v"];
    row["min_neg_clearance"] = rj["min_neg_clearance"];
    row["max_residual"] = rj["max_residual"];
    row["residual_violations"] = run.report->residual_violations;
    row["kink_violations"] = run.report->kink_violations;
  }
  if (ctx.svg && run.v) {
    const auto& v = *run.v;
    plot::Series line{"v", plot::Series::Kind::Line, "supersolution", {}};
    for (std::size_t s = 0; s < v.segments.size(); ++s) {
      const double x0 = v.breakpoints[s];
      const double len = v.breakpoints[s + 1] - x0;
      for (int k = 0; k < 8; ++k) {
        const double t = len * k / 8.0;
        line.points.emplace_back(x0 + t, v.segments[s].value(t));
      }
    }
    line.points.emplace_back(v.breakpoints.back(), v.segments.back().value(v.breakpoints.back() - v.breakpoints[v.breakpoints.size() - 2]));
    plot::Series cores{"positive cores", plot::Series::Kind::Points, "positive", {}};
    for (const auto& c : run.cores) cores.points.emplace_back(c.x, c.y);
    plot::Series negs{"negative centers", plot::Series::Kind::Points, "negative", {}};
    double y_lo = run.scales.h * 0.5, y_hi = 0;
    for (const auto& pt : line.points) y_hi = std::max(y_hi, pt.second);
    y_hi += 2 * run.scales.h;
    for (const auto& n : run.obstacles.negatives) {
      if (n.y >= y_lo && n.y <= y_hi && n.x >= v.breakpoints.front() && n.x <= v.breakpoints.back()) {
        negs.points.emplace_back(n.x, n.y);
      }
    }
    const std::vector<plot::Series> series{line, cores, negs};
    write_svg(ctx.dir / ("continuum_" + tag + ".svg"), series,
              {"continuum supersolution, seed " + tag, "x", "y"});
  }
  return row;
}

json run_task(const TaskParams& params, const TaskContext& ctx, json& doc) {
  return std::visit(
      [&](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, BuildParams>) return run_discrete_build(p, ctx, doc);
        else if constexpr (std::is_same_v<T, SimulateParams>) return run_discrete_simulate(p, ctx, doc);
        else if constexpr (std::is_same_v<T, AlphaParams>) return run_alpha_estimate(p, ctx, doc);
        else if constexpr (std::is_same_v<T, PercolationParams>) return run_percolation(p, ctx, doc);
        else return run_continuum_build(p, ctx, doc);
      },
      params);
}

// Executes one task and returns its CSV cells (summary columns only).
std::vector<std::string> execute(Kind kind, const json& params, std::uint64_t seed, const fs::path& dir,
                                 bool svg) {
  std::vector<std::string> errors;
  const TaskParams tp = parse_params(kind, params, "params", errors);
  TaskContext ctx{seed, dir, svg, params};
  json doc = {{"kind", to_string(kind)}, {"seed", seed}, {"params", params}};
  json row;
  std::string status = "ok", message;
  try {
    if (!errors.empty()) fail(ErrorCode::Config, errors.front());
    row = run_task(tp, ctx, doc);
  } catch (const std::exception& e) {
    status = "error";
    message = e.what();
  }
  doc["status"] = status;
  doc["error"] = message.empty() ? json(nullptr) : json(message);
  doc["summary"] = row;
  write_atomic(dir / ("run_" + std::to_string(seed) + ".json"), doc.dump(1) + "\n");

  std::vector<std::string> cells;
  for (const auto& col : summary_columns(kind)) {
    if (col == "seed") cells.push_back(std::to_string(seed));
    else if (col == "status") cells.push_back(status);
    else if (col == "error") cells.push_back(message);
    else cells.push_back(row.is_object() && row.contains(col) ? cell(row[col]) : "");
  }
  return cells;
}

void set_path(json& obj, const std::string& dotted, const json& value) {
  json* cur = &obj;
  std::size_t start = 0;
  for (;;) {
    const auto dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      (*cur)[key] = value;
      return;
    }
    if (!cur->contains(key) || !(*cur)[key].is_object()) (*cur)[key] = json::object();
    cur = &(*cur)[key];
    start = dot + 1;
  }
}

// Cartesian product of the axes, last axis varying fastest.
std::vector<std::vector<json>> grid_points(const std::vector<SweepAxis>& axes) {
  std::vector<std::vector<json>> out{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<json>> next;
    for (const auto& prefix : out) {
      for (const auto& v : axis.values) {
        auto p = prefix;
        p.push_back(v);
        next.push_back(std::move(p));
      }
    }
    out = std::move(next);
  }
  return out;
}

json point_params(const ExperimentConfig& c, const std::vector<json>& point) {
  json params = c.params;
  for (std::size_t a = 0; a < c.axes.size(); ++a) set_path(params, c.axes[a].path, point[a]);
  return params;
}

std::string join_csv(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += csv_escape(cells[i]);
  }
  return line;
}

std::optional<double> numeric(const std::string& s) {
  if (s == "true") return 1.0;
  if (s == "false") return 0.0;
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

void collect_manifest(const fs::path& root, Manifest& m) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), root);
    if (rel == "manifest.json" || entry.path().extension() == ".tmp") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  for (const auto& rel : files) {
    m.files.push_back({rel.generic_string(), sha256_hex(root / rel), fs::file_size(root / rel)});
  }
}

}  // namespace

std::optional<Kind> kind_from_string(std::string_view name) {
  if (name == "discrete-build") return Kind::DiscreteBuild;
  if (name == "discrete-simulate") return Kind::DiscreteSimulate;
  if (name == "alpha-estimate") return Kind::AlphaEstimate;
  if (name == "percolation") return Kind::Percolation;
  if (name == "continuum-build") return Kind::ContinuumBuild;
  if (name == "sweep") return Kind::Sweep;
  return std::nullopt;
}

const char* to_string(Kind kind) {
  switch (kind) {
    case Kind::DiscreteBuild: return "discrete-build";
    case Kind::DiscreteSimulate: return "discrete-simulate";
    case Kind::AlphaEstimate: return "alpha-estimate";
    case Kind::Percolation: return "percolation";
    case Kind::ContinuumBuild: return "continuum-build";
    case Kind::Sweep: return "sweep";
  }
  return "unknown";
}

std::vector<std::string> summary_columns(Kind kind) {
  std::vector<std::string> cols{"seed", "status"};
  switch (kind) {
    case Kind::DiscreteBuild:
      cols.insert(cols.end(), {"min_v", "nonnegative", "forward_slope", "backward_slope", "violations", "v_center"});
      break;
    case Kind::DiscreteSimulate:
      cols.insert(cols.end(), {"run_status", "jump_count", "final_time", "max_height", "final_max_height", "comparison"});
      break;
    case Kind::AlphaEstimate:
      cols.insert(cols.end(),
                  {"estimate", "std_error", "exact", "exact_error_bound", "pinning_margin", "pinning_satisfied"});
      break;
    case Kind::Percolation:
      cols.insert(cols.end(), {"found", "min_phi", "max_phi", "open_fraction"});
      break;
    case Kind::ContinuumBuild:
      cols.insert(cols.end(), {"outcome", "segments", "min_v", "min_neg_clearance", "max_residual",
                               "residual_violations", "kink_violations", "F_star", "rho"});
      break;
    case Kind::Sweep:
      break;
  }
  cols.push_back("error");
  return cols;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

ExperimentConfig parse_config(const json& doc, const Overrides& ov) {
  std::vector<std::string> errors;
  ExperimentConfig c;
  Reader top(doc, "", errors);
  // params are checked whenever the experiment shape is known, so one pass reports everything.
  bool shape_known = true;

  const json* kind = top.raw("kind");
  if (!kind && ov.kind) {
    c.kind = *ov.kind;
  } else if (!kind || !kind->is_string() || !kind_from_string(kind->get<std::string>())) {
    top.error("kind", "must be one of discrete-build, discrete-simulate, alpha-estimate, percolation, "
                      "continuum-build, sweep");
    shape_known = false;
  } else {
    c.kind = *kind_from_string(kind->get<std::string>());
    if (ov.kind && *ov.kind != c.kind) {
      top.error("kind", std::string("config says ") + to_string(c.kind) + " but " + to_string(*ov.kind) +
                            " was requested");
    }
  }

  // Seeds.
  std::uint64_t base = 0;
  const json* seeds = top.raw("seeds");
  if (!seeds) {
    if (!ov.seed_count) top.error("seeds", "required");
  } else if (seeds->is_array()) {
    if (seeds->empty()) top.error("seeds", "must not be empty");
    for (const auto& s : *seeds) {
      if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
        top.error("seeds", "entries must be non-negative integers");
        break;
      }
      c.seeds.push_back(s.get<std::uint64_t>());
    }
    if (!c.seeds.empty()) base = c.seeds.front();
  } else if (seeds->is_object()) {
    Reader sr(*seeds, "seeds", errors);
    base = static_cast<std::uint64_t>(sr.integer("base", 0, 0, kBig));
    const std::int64_t count = sr.integer("count", std::nullopt, 1, 10'000'000);
    sr.finish();
    for (std::int64_t k = 0; k < count; ++k) c.seeds.push_back(base + static_cast<std::uint64_t>(k));
  } else {
    top.error("seeds", "must be a list or {\"base\", \"count\"}");
  }
  if (ov.seed_count) {
    if (*ov.seed_count < 1) {
      top.error("seeds", "--seeds must be at least 1");
    } else {
      c.seeds.clear();
      for (std::int64_t k = 0; k < *ov.seed_count; ++k) c.seeds.push_back(base + static_cast<std::uint64_t>(k));
    }
  }
  {
    auto sorted = c.seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) top.error("seeds", "duplicate seed");
  }

  const json* out = top.raw("output");
  if (ov.output_dir) {
    c.output_dir = *ov.output_dir;
  } else if (out && out->is_string() && !out->get<std::string>().empty()) {
    c.output_dir = out->get<std::string>();
  } else {
    top.error("output", "required (or pass --out)");
  }
  c.emit_svg = top.flag("emit_svg", false) || ov.emit_svg;
  c.jobs = static_cast<int>(top.integer("jobs", 1, 1, 1024));
  if (ov.jobs) {
    if (*ov.jobs < 1) top.error("jobs", "--jobs must be at least 1");
    else c.jobs = *ov.jobs;
  }

  const json* params = top.raw("params");
  c.params = params ? *params : json::object();
  if (!c.params.is_object()) top.error("params", "must be an object");

  const json* base_kind = top.raw("base_kind");
  const json* grid = top.raw("grid");
  if (c.kind == Kind::Sweep) {
    if (!base_kind || !base_kind->is_string() || !kind_from_string(base_kind->get<std::string>()) ||
        *kind_from_string(base_kind->get<std::string>()) == Kind::Sweep) {
      top.error("base_kind", "must name a non-sweep experiment kind");
      shape_known = false;
    } else {
      c.base_kind = *kind_from_string(base_kind->get<std::string>());
    }
    if (!grid || !grid->is_object() || grid->empty()) {
      top.error("grid", "must be a non-empty object of axis -> list of values");
      shape_known = false;
    } else {
      for (auto it = grid->begin(); it != grid->end(); ++it) {
        if (!it.value().is_array() || it.value().empty()) {
          top.error("grid." + it.key(), "must be a non-empty list");
          shape_known = false;
          continue;
        }
        c.axes.push_back({it.key(), std::vector<json>(it.value().begin(), it.value().end())});
      }
    }
  } else {
    if (base_kind) top.error("base_kind", "only valid for sweep");
    if (grid) top.error("grid", "only valid for sweep");
    c.base_kind = c.kind;
  }
  top.finish();

  if (shape_known && c.params.is_object()) {
    const auto points = grid_points(c.axes);
    for (std::size_t k = 0; k < points.size(); ++k) {
      const std::string prefix = c.kind == Kind::Sweep ? "grid point " + std::to_string(k) + ": params" : "params";
      parse_params(c.base_kind, point_params(c, points[k]), prefix, errors);
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    fail(ErrorCode::Config, msg);
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path, const Overrides& ov) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, "cannot read config file " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Config, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc, ov);
}

Manifest run(const ExperimentConfig& c) {
  std::error_code ec;
  fs::create_directories(c.output_dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory " + c.output_dir.string() + ": " + ec.message());

  Manifest m;
  const auto points = grid_points(c.axes);
  const bool sweep = c.kind == Kind::Sweep;
  const auto base_cols = summary_columns(c.base_kind);

  std::vector<std::string> header;
  if (sweep) {
    header.push_back("point");
    for (const auto& a : c.axes) header.push_back(a.path);
  }
  header.insert(header.end(), base_cols.begin(), base_cols.end());
  const fs::path csv_path = c.output_dir / (sweep ? "sweep.csv" : "results.csv");

  // Existing sweep rows, keyed by (point, seed).
  std::map<std::pair<std::size_t, std::uint64_t>, std::vector<std::string>> existing;
  if (sweep && fs::exists(csv_path)) {
    std::ifstream in(csv_path);
    std::string line;
    bool saw_header = false;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      auto cells = csv_split(line);
      if (!saw_header) {
        if (cells != header) fail(ErrorCode::Config, "existing sweep.csv has a different header; use a new --out");
        saw_header = true;
        continue;
      }
      if (cells.size() != header.size()) continue;
      const std::size_t point = std::stoul(cells[0]);
      const std::uint64_t seed = std::stoull(cells[1 + c.axes.size()]);
      existing[{point, seed}] = std::move(cells);
    }
  }

  struct Task {
    std::size_t point;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (std::uint64_t s : c.seeds) tasks.push_back({p, s});
  }
  std::vector<std::vector<std::string>> rows(tasks.size());
  std::vector<std::size_t> pending;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    auto it = existing.find({tasks[t].point, tasks[t].seed});
    // A row only counts when its axis values still match the grid point.
    bool same_point = it != existing.end();
    for (std::size_t a = 0; same_point && a < c.axes.size(); ++a) {
      same_point = it->second[1 + a] == cell(points[tasks[t].point][a]);
    }
    if (same_point) {
      rows[t] = it->second;
      ++m.skipped_tasks;
    } else {
      pending.push_back(t);
    }
  }
  for (std::size_t p = 0; p < points.size(); ++p) {
    if (sweep) fs::create_directories(c.output_dir / ("point_" + std::to_string(p)));
  }

  parallel_for(pending.size(), c.jobs, [&](std::size_t k) {
    const Task& task = tasks[pending[k]];
    const fs::path dir = sweep ? c.output_dir / ("point_" + std::to_string(task.point)) : c.output_dir;
    auto cells = execute(c.base_kind, point_params(c, points[task.point]), task.seed, dir, c.emit_svg);
    std::vector<std::string> row;
    if (sweep) {
      row.push_back(std::to_string(task.point));
      for (const auto& v : points[task.point]) row.push_back(cell(v));
    }
    row.insert(row.end(), cells.begin(), cells.end());
    rows[pending[k]] = std::move(row);
  });

  m.tasks = static_cast<std::int64_t>(tasks.size());
  const std::size_t status_col = (sweep ? 1 + c.axes.size() : 0) + 1;
  for (const auto& r : rows) {
    if (r[status_col] != "ok") ++m.failed_tasks;
  }

  {
    std::string body = std::string(kSchemaLine) + "\n" + join_csv(header) + "\n";
    for (const auto& r : rows) body += join_csv(r) + "\n";
    write_atomic(csv_path, body);
  }

  if (sweep) {
    // Means over successful seeds of every numeric summary column.
    std::vector<std::string> agg_header{"point"};
    for (const auto& a : c.axes) agg_header.push_back(a.path);
    agg_header.insert(agg_header.end(), {"seeds", "ok"});
    const std::size_t first_metric = 1 + c.axes.size() + 2;  // skip seed, status
    std::vector<std::size_t> metric_cols;
    for (std::size_t col = first_metric; col < header.size(); ++col) {
      if (header[col] == "error") continue;
      metric_cols.push_back(col);
      agg_header.push_back("mean_" + header[col]);
    }
    std::string body = std::string(kSchemaLine) + "\n" + join_csv(agg_header) + "\n";
    for (std::size_t p = 0; p < points.size(); ++p) {
      std::vector<std::string> out{std::to_string(p)};
      for (const auto& v : points[p]) out.push_back(cell(v));
      std::int64_t n = 0, ok = 0;
      std::vector<double> sum(metric_cols.size(), 0.0);
      std::vector<std::int64_t> cnt(metric_cols.size(), 0);
      for (std::size_t t = 0; t < tasks.size(); ++t) {
        if (tasks[t].point != p) continue;
        ++n;
        if (rows[t][status_col] != "ok") continue;
        ++ok;
        for (std::size_t k = 0; k < metric_cols.size(); ++k) {
          if (auto v = numeric(rows[t][metric_cols[k]])) {
            sum[k] += *v;
            ++cnt[k];
          }
        }
      }
      out.push_back(std::to_string(n));
      out.push_back(std::to_string(ok));
      for (std::size_t k = 0; k < metric_cols.size(); ++k) {
        out.push_back(cnt[k] == static_cast<std::int64_t>(ok) && ok > 0 ? fmt(sum[k] / static_cast<double>(cnt[k])) : "");
      }
      body += join_csv(out) + "\n";
    }
    write_atomic(c.output_dir / "sweep_summary.csv", body);
  }

  collect_manifest(c.output_dir, m);
  write_atomic(c.output_dir / "manifest.json", manifest_to_json(m).dump(1) + "\n");
  return m;
}

std::string sha256_hex(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read " + file.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) fail(ErrorCode::Io, "sha256 init failed");
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

json manifest_to_json(const Manifest& m) {
  json files = json::array();
  for (const auto& f : m.files) files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  return {{"files", files}, {"tasks", m.tasks}, {"failed_tasks", m.failed_tasks}, {"skipped_tasks", m.skipped_tasks}};
}

}  // namespace pinning::harness
