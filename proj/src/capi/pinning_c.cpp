#include "pinning/pinning.h"

#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "pinning/continuum.hpp"
#include "pinning/discrete_dynamics.hpp"
#include "pinning/discrete_pinning.hpp"
#include "pinning/error.hpp"
#include "pinning/harness.hpp"
#include "pinning/lipschitz.hpp"
#include "pinning/random_media.hpp"

using namespace pinning;

struct pin_distribution {
  std::shared_ptr<const media::DistributionSpec> spec;
};

struct pin_path {
  discrete::SupersolutionPath path;
};

struct pin_grid {
  percolation::SiteGrid grid;
};

namespace {

thread_local std::string g_last_error;

pin_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return PIN_ERR_INVALID_ARGUMENT;
    case ErrorCode::Divergent: return PIN_ERR_DIVERGENT;
    case ErrorCode::BudgetExceeded: return PIN_ERR_BUDGET_EXCEEDED;
    case ErrorCode::Infeasible: return PIN_ERR_INFEASIBLE;
    case ErrorCode::Unsupported: return PIN_ERR_UNSUPPORTED;
    case ErrorCode::Io: return PIN_ERR_IO;
    case ErrorCode::Config: return PIN_ERR_CONFIG;
  }
  return PIN_ERR_INTERNAL;
}

template <class F>
pin_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return PIN_OK;
  } catch (const PinningError& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PIN_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PIN_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return PIN_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (!p) fail(ErrorCode::InvalidArgument, std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

harness::Overrides overrides_from(const pin_run_options* o) {
  harness::Overrides ov;
  if (!o) return ov;
  if (o->kind) {
    auto k = harness::kind_from_string(o->kind);
    if (!k) fail(ErrorCode::Config, std::string("unknown experiment kind '") + o->kind + "'");
    ov.kind = k;
  }
  if (o->out_dir) ov.output_dir = o->out_dir;
  if (o->seed_count != 0) ov.seed_count = o->seed_count;
  if (o->jobs != 0) ov.jobs = o->jobs;
  ov.emit_svg = o->emit_svg != 0;
  return ov;
}

void finish_run(const harness::ExperimentConfig& cfg, char** manifest_json) {
  const harness::Manifest m = harness::run(cfg);
  if (manifest_json) *manifest_json = dup_string(harness::manifest_to_json(m).dump(1));
}

}  // namespace

extern "C" {

const char* pin_version(void) { return "1.0.0"; }

const char* pin_last_error(void) { return g_last_error.c_str(); }

const char* pin_status_name(pin_status status) {
  switch (status) {
    case PIN_OK: return "ok";
    case PIN_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case PIN_ERR_DIVERGENT: return "divergent";
    case PIN_ERR_BUDGET_EXCEEDED: return "budget_exceeded";
    case PIN_ERR_INFEASIBLE: return "infeasible";
    case PIN_ERR_UNSUPPORTED: return "unsupported";
    case PIN_ERR_IO: return "io";
    case PIN_ERR_CONFIG: return "config";
    case PIN_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void pin_string_free(char* s) { delete[] s; }

pin_status pin_distribution_from_json(const char* json, pin_distribution** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(json);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::Config, std::string("distribution JSON: ") + e.what());
    }
    auto spec = std::make_shared<const media::DistributionSpec>(media::distribution_from_json(doc));
    *out = new pin_distribution{std::move(spec)};
  });
}

pin_status pin_distribution_bernoulli(const char* p, pin_distribution** out) {
  return guarded([&] {
    need(p, "p");
    need(out, "out");
    auto spec = std::make_shared<const media::DistributionSpec>(
        media::DistributionSpec::plus_minus_one(Rational::parse(p)));
    *out = new pin_distribution{std::move(spec)};
  });
}

void pin_distribution_free(pin_distribution* d) { delete d; }

pin_status pin_distribution_upper_bound(const pin_distribution* d, int64_t* out) {
  return guarded([&] {
    need(d, "distribution");
    need(out, "out");
    *out = d->spec->upper_bound();
  });
}

pin_status pin_field_site(const pin_distribution* d, uint64_t seed, int64_t i, int64_t j, int* is_minus_inf,
                          int64_t* value) {
  return guarded([&] {
    need(d, "distribution");
    need(is_minus_inf, "is_minus_inf");
    need(value, "value");
    const ExtInt f = media::SeededField(seed, d->spec)(i, j);
    *is_minus_inf = f.is_minus_infinity() ? 1 : 0;
    *value = f.is_finite() ? f.value() : 0;
  });
}

pin_status pin_mean_max_exact(const pin_distribution* d, int depth, double* value, double* error_bound) {
  return guarded([&] {
    need(d, "distribution");
    need(value, "value");
    const auto r = media::mean_max_exact(*d->spec, depth);
    *value = r.value;
    if (error_bound) *error_bound = r.error_bound;
  });
}

pin_status pin_mean_max_mc(const pin_distribution* d, int64_t samples, int depth, uint64_t seed, double* estimate,
                           double* std_error) {
  return guarded([&] {
    need(d, "distribution");
    need(estimate, "estimate");
    const auto r = media::mean_max_mc(*d->spec, samples, depth, seed);
    *estimate = r.estimate;
    if (std_error) *std_error = r.std_error;
  });
}

pin_status pin_pinning_condition(const pin_distribution* d, int64_t F, int depth, int* satisfied, double* margin) {
  return guarded([&] {
    need(d, "distribution");
    need(satisfied, "satisfied");
    const auto r = media::pinning_condition(*d->spec, F, depth);
    *satisfied = r.satisfied ? 1 : 0;
    if (margin) *margin = r.margin;
  });
}

pin_status pin_poisson_points(double x0, double x1, double y0, double y1, double intensity, uint64_t seed,
                              uint64_t stream, double* xy, size_t capacity, size_t* count) {
  return guarded([&] {
    need(count, "count");
    const auto s = media::sample_poisson_points({x0, x1, y0, y1}, intensity, seed, stream);
    *count = s.points.size();
    if (!xy) return;
    const std::size_t n = std::min(capacity, s.points.size());
    for (std::size_t k = 0; k < n; ++k) {
      xy[2 * k] = s.points[k].x;
      xy[2 * k + 1] = s.points[k].y;
    }
  });
}

pin_status pin_path_construct(const pin_distribution* d, uint64_t seed, int64_t n_start, int64_t F,
                              int64_t half_width, pin_path** out) {
  return guarded([&] {
    need(d, "distribution");
    need(out, "out");
    media::SeededField field(seed, d->spec);
    *out = new pin_path{discrete::construct_supersolution(field, n_start, F, half_width, {})};
  });
}

void pin_path_free(pin_path* p) { delete p; }

int64_t pin_path_half_width(const pin_path* p) { return p ? p->path.half_width : 0; }

pin_status pin_path_value(const pin_path* p, int64_t i, int64_t* out) {
  return guarded([&] {
    need(p, "path");
    need(out, "out");
    require(i >= -p->path.half_width && i <= p->path.half_width, "site outside the path");
    *out = p->path.value(i);
  });
}

pin_status pin_path_verify(const pin_path* p, const pin_distribution* d, uint64_t seed, size_t* violations) {
  return guarded([&] {
    need(p, "path");
    need(d, "distribution");
    need(violations, "violations");
    media::SeededField field(seed, d->spec);
    *violations = discrete::verify_discrete(p->path, field, p->path.F).size();
  });
}

pin_status pin_path_stats(const pin_path* p, int64_t* min_v, double* forward_slope, double* backward_slope) {
  return guarded([&] {
    need(p, "path");
    const auto s = discrete::path_stats(p->path);
    if (min_v) *min_v = s.min_v;
    if (forward_slope) *forward_slope = s.forward_slope;
    if (backward_slope) *backward_slope = s.backward_slope;
  });
}

pin_status pin_path_write(const pin_path* p, const char* file) {
  return guarded([&] {
    need(p, "path");
    need(file, "file");
    std::ofstream os(file);
    if (!os) fail(ErrorCode::Io, std::string("cannot open ") + file);
    discrete::write_path(os, p->path);
    if (!os) fail(ErrorCode::Io, std::string("write failed for ") + file);
  });
}

pin_status pin_path_read(const char* file, pin_path** out) {
  return guarded([&] {
    need(file, "file");
    need(out, "out");
    std::ifstream is(file);
    if (!is) fail(ErrorCode::Io, std::string("cannot open ") + file);
    *out = new pin_path{discrete::read_path(is)};
  });
}

pin_status pin_simulate(const pin_distribution* d, uint64_t seed, int64_t F, size_t width, double horizon,
                        int64_t jump_budget, const pin_path* barrier, pin_sim_result* out) {
  return guarded([&] {
    need(d, "distribution");
    need(out, "out");
    media::SeededField field(seed, d->spec);
    dynamics::SimulationParams sp;
    sp.F = F;
    sp.width = width;
    sp.horizon = horizon;
    sp.seed = seed;
    if (jump_budget > 0) sp.jump_budget = jump_budget;
    std::optional<dynamics::ComparisonObserver> obs;
    std::vector<dynamics::Observer*> observers;
    if (barrier) {
      obs.emplace(barrier->path, sp.offset(), sp.width);
      observers.push_back(&*obs);
    }
    const auto traj = dynamics::simulate(field, sp, observers);
    *out = pin_sim_result{};
    out->jump_count = traj.jump_count;
    out->final_time = traj.final_time;
    out->max_height = traj.max_height;
    out->completed = traj.status == dynamics::RunStatus::Completed ? 1 : 0;
    out->compared = obs ? 1 : 0;
    out->comparison_ok = !obs || obs->result().ok ? 1 : 0;
    if (obs && obs->result().first_violation) {
      out->violation_time = obs->result().first_violation->first;
      out->violation_site = static_cast<int64_t>(obs->result().first_violation->second);
    }
  });
}

pin_status pin_grid_generate(int64_t width, int64_t height, double p, int64_t d, uint64_t seed, pin_grid** out) {
  return guarded([&] {
    need(out, "out");
    *out = new pin_grid{d == 1 ? percolation::generate_grid_iid(width, height, p, seed)
                               : percolation::generate_grid_blocked(width, height, p, d, seed)};
  });
}

pin_status pin_grid_new(int64_t width, int64_t height, int64_t d, pin_grid** out) {
  return guarded([&] {
    need(out, "out");
    *out = new pin_grid{percolation::SiteGrid(width, height, d)};
  });
}

void pin_grid_free(pin_grid* g) { delete g; }

pin_status pin_grid_set_open(pin_grid* g, int64_t z, int64_t h, int is_open) {
  return guarded([&] {
    need(g, "grid");
    g->grid.set_open(z, h, is_open != 0);
  });
}

pin_status pin_grid_is_open(const pin_grid* g, int64_t z, int64_t h, int* out) {
  return guarded([&] {
    need(g, "grid");
    need(out, "out");
    *out = g->grid.open(z, h) ? 1 : 0;
  });
}

pin_status pin_grid_minimal_surface(const pin_grid* g, int64_t* phi, int* found) {
  return guarded([&] {
    need(g, "grid");
    need(phi, "phi");
    need(found, "found");
    const auto s = percolation::minimal_open_surface(g->grid);
    *found = s ? 1 : 0;
    if (s) std::copy(s->phi.begin(), s->phi.end(), phi);
  });
}

pin_status pin_grid_brute_force_surface(const pin_grid* g, int64_t budget, int64_t* phi, int* found) {
  return guarded([&] {
    need(g, "grid");
    need(phi, "phi");
    need(found, "found");
    const auto s = percolation::brute_force_minimal_surface(g->grid, budget);
    *found = s ? 1 : 0;
    if (s) std::copy(s->phi.begin(), s->phi.end(), phi);
  });
}

pin_status pin_enumerate_admissible_paths(const pin_grid* g, int64_t from_z, int64_t to_z, int64_t h,
                                          int64_t budget, int64_t* count) {
  return guarded([&] {
    need(g, "grid");
    need(count, "count");
    *count = percolation::enumerate_admissible_paths(g->grid, from_z, to_z, h, budget);
  });
}

pin_status pin_critical_probability(int n, int d, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = percolation::critical_probability(n, d);
  });
}

pin_status pin_admissible_path_bound(int64_t h, int64_t z_abs, double q, int n, int d, double* out) {
  return guarded([&] {
    need(out, "out");
    const auto b = percolation::admissible_path_bound(h, z_abs, q, n, d);
    if (!b) fail(ErrorCode::Divergent, "admissible path bound diverges (8 n q^(1/d) >= 1)");
    *out = *b;
  });
}

pin_status pin_select_scales(double k, double alpha, double lambda_plus, double lambda_minus, pin_scales* out) {
  return guarded([&] {
    need(out, "out");
    const auto s = continuum::select_scales(k, alpha, lambda_plus, lambda_minus);
    *out = pin_scales{s.k, s.alpha, s.lambda_plus, s.lambda_minus, s.l, s.d_gap, s.h, s.b,
                      s.N, s.rho, s.F_star, s.S, s.p0};
  });
}

pin_status pin_continuum_run(double k, double alpha, double lambda_plus, double lambda_minus, int64_t columns,
                             int64_t rows, uint64_t seed, char** result_json) {
  return guarded([&] {
    need(result_json, "result_json");
    continuum::ContinuumParams p;
    p.k = k;
    p.alpha = alpha;
    p.lambda_plus = lambda_plus;
    p.lambda_minus = lambda_minus;
    p.columns = columns;
    p.rows = rows;
    p.seed = seed;
    const auto run = continuum::run_continuum(p);
    nlohmann::json doc = {{"status", run.status}, {"detail", run.detail},
                          {"scales", continuum::scales_to_json(run.scales)}};
    doc["report"] = run.report ? continuum::to_json(*run.report) : nlohmann::json();
    doc["segments"] = run.v ? run.v->segments.size() : 0;
    *result_json = dup_string(doc.dump());
  });
}

pin_status pin_experiment_run(const char* config_json, const pin_run_options* options, char** manifest_json) {
  return guarded([&] {
    need(config_json, "config_json");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(config_json, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
    }
    finish_run(harness::parse_config(doc, overrides_from(options)), manifest_json);
  });
}

pin_status pin_experiment_run_file(const char* config_path, const pin_run_options* options, char** manifest_json) {
  return guarded([&] {
    need(config_path, "config_path");
    finish_run(harness::load_config(config_path, overrides_from(options)), manifest_json);
  });
}

}  // extern "C"
