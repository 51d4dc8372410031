#include "pinning/discrete_pinning.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace pinning::discrete {

std::int64_t SupersolutionPath::increment(std::int64_t n) const {
  require(n != 0 && n >= -(half_width + 1) && n <= half_width + 1, "increment index out of range");
  return n > 0 ? provisional(n) - value(n - 1) : provisional(n) - value(n + 1);
}

ColumnChoice best_drop(const media::SeededField& field, std::int64_t column, std::int64_t top,
                       const SearchBudget& budget) {
  const std::int64_t upper = field.spec->upper_bound();
  ExtInt best = ExtInt::minus_infinity();
  std::int64_t best_m = 0;
  for (std::int64_t m = 0;; ++m) {
    if (best.is_finite() && upper - m <= best.value()) break;
    if (m >= budget.vertical) {
      fail(ErrorCode::BudgetExceeded, "argmax search in column " + std::to_string(column) +
                                          " exhausted the vertical budget");
    }
    const ExtInt score = field(column, top - m) - m;
    if (score > best) {
      best = score;
      best_m = m;
    }
  }
  return {best_m, best.value()};
}

SupersolutionPath construct_supersolution(const media::SeededField& field, std::int64_t n_start,
                                          std::int64_t F, std::int64_t half_width,
                                          const SearchBudget& budget) {
  require(half_width >= 1, "construct_supersolution: half_width must be at least 1");
  require(n_start >= 0, "construct_supersolution: n_start must be non-negative");
  const std::int64_t W = half_width;
  SupersolutionPath path;
  path.half_width = W;
  path.F = F;
  path.n_start = n_start;
  path.v.assign(static_cast<std::size_t>(2 * W + 1), 0);
  path.v_bar.assign(static_cast<std::size_t>(2 * W + 3), 0);
  path.argmax_m.assign(static_cast<std::size_t>(2 * W + 1), 0);
  auto v = [&](std::int64_t i) -> std::int64_t& { return path.v[static_cast<std::size_t>(i + W)]; };
  auto v_bar = [&](std::int64_t i) -> std::int64_t& {
    return path.v_bar[static_cast<std::size_t>(i + W + 1)];
  };
  auto drop = [&](std::int64_t i) -> std::int64_t& {
    return path.argmax_m[static_cast<std::size_t>(i + W)];
  };

  std::int64_t start = n_start;
  while (field(0, start).is_minus_infinity()) {
    if (start - n_start >= budget.vertical) {
      fail(ErrorCode::BudgetExceeded, "no finite obstacle found above N_start in column 0");
    }
    ++start;
  }
  const std::int64_t f0 = field(0, start).value();
  v(0) = start;
  v_bar(0) = start;
  v_bar(1) = v_bar(-1) = start + floor_div(f0 - F, 2);

  for (const std::int64_t dir : {std::int64_t{1}, std::int64_t{-1}}) {
    for (std::int64_t n = 1; n <= W; ++n) {
      const std::int64_t c = dir * n;
      const ColumnChoice choice = best_drop(field, c, v_bar(c), budget);
      drop(c) = choice.m;
      v(c) = v_bar(c) - choice.m;
      const std::int64_t f_here = choice.score + choice.m;
      v_bar(c + dir) = 2 * v(c) - v(c - dir) + f_here - F;
    }
  }
  return path;
}

std::vector<Violation> verify_discrete(const SupersolutionPath& path, const media::SeededField& field,
                                       std::int64_t F) {
  const std::int64_t W = path.half_width;
  std::vector<Violation> out;
  for (std::int64_t i = -W; i <= W; ++i) {
    const std::int64_t left = i == -W ? path.provisional(-W - 1) : path.value(i - 1);
    const std::int64_t right = i == W ? path.provisional(W + 1) : path.value(i + 1);
    const std::int64_t lhs = left + right - 2 * path.value(i);
    const ExtInt rhs = field(i, path.value(i)) - F;
    if (rhs.is_minus_infinity() || lhs > rhs.value()) out.push_back({i, lhs, rhs});
  }
  return out;
}

PathStats path_stats(const SupersolutionPath& path) {
  const std::int64_t W = path.half_width;
  require(W >= 2, "path_stats: half_width must be at least 2");
  PathStats s;
  s.min_v = path.v.front();
  for (std::int64_t x : path.v) s.min_v = std::min(s.min_v, x);
  s.nonnegative = s.min_v >= 0;
  const std::int64_t h = (W + 1) / 2;
  auto fwd = [&](std::int64_t n) { return path.value(n) - path.value(n - 1); };
  auto bwd = [&](std::int64_t n) { return path.value(-n) - path.value(-n + 1); };
  const double span = static_cast<double>(W - h);
  s.forward_slope = static_cast<double>(fwd(W) - fwd(h)) / span;
  s.backward_slope = static_cast<double>(bwd(W) - bwd(h)) / span;
  return s;
}

void write_path(std::ostream& os, const SupersolutionPath& path) {
  const std::int64_t W = path.half_width;
  os << "# supersolution-path v1\n";
  os << "# half_width=" << W << " F=" << path.F << " n_start=" << path.n_start
     << " v_bar_lo=" << path.provisional(-W - 1) << " v_bar_hi=" << path.provisional(W + 1) << "\n";
  os << "# i v v_bar argmax_m\n";
  for (std::int64_t i = -W; i <= W; ++i) {
    os << i << ' ' << path.value(i) << ' ' << path.provisional(i) << ' ' << path.drop(i) << '\n';
  }
}

SupersolutionPath read_path(std::istream& is) {
  std::string line;
  auto bad = [](const std::string& why) { fail(ErrorCode::Io, "read_path: " + why); };
  if (!std::getline(is, line) || line != "# supersolution-path v1") bad("missing format header");
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) bad("missing metadata line");
  SupersolutionPath path;
  std::int64_t lo = 0, hi = 0;
  {
    std::istringstream meta(line.substr(2));
    std::string kv;
    int seen = 0;
    while (meta >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) bad("malformed metadata '" + kv + "'");
      const std::string key = kv.substr(0, eq);
      const std::int64_t val = std::stoll(kv.substr(eq + 1));
      if (key == "half_width") path.half_width = val;
      else if (key == "F") path.F = val;
      else if (key == "n_start") path.n_start = val;
      else if (key == "v_bar_lo") lo = val;
      else if (key == "v_bar_hi") hi = val;
      else continue;
      ++seen;
    }
    if (seen != 5 || path.half_width < 1) bad("incomplete metadata");
  }
  std::getline(is, line);  // column header
  const std::int64_t W = path.half_width;
  path.v.assign(static_cast<std::size_t>(2 * W + 1), 0);
  path.v_bar.assign(static_cast<std::size_t>(2 * W + 3), 0);
  path.argmax_m.assign(static_cast<std::size_t>(2 * W + 1), 0);
  path.v_bar.front() = lo;
  path.v_bar.back() = hi;
  for (std::int64_t i = -W; i <= W; ++i) {
    std::int64_t idx = 0, v = 0, vb = 0, m = 0;
    if (!(is >> idx >> v >> vb >> m) || idx != i) bad("row for site " + std::to_string(i));
    path.v[static_cast<std::size_t>(i + W)] = v;
    path.v_bar[static_cast<std::size_t>(i + W + 1)] = vb;
    path.argmax_m[static_cast<std::size_t>(i + W)] = m;
  }
  return path;
}

}  // namespace pinning::discrete
