#include "pinning/lipschitz.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pinning/counter_rng.hpp"
#include "pinning/error.hpp"

namespace pinning::percolation {

SiteGrid::SiteGrid(std::int64_t width, std::int64_t height, std::int64_t dependence, double p,
                   std::uint64_t seed)
    : width_(width), height_(height), dependence_(dependence), p_(p), seed_(seed) {
  require(width >= 1 && height >= 1, "SiteGrid: width and height must be positive");
  require(dependence >= 1, "SiteGrid: dependence range d must be at least 1");
  bits_.assign(static_cast<std::size_t>(width * height), 0);
}

std::size_t SiteGrid::index(std::int64_t z, std::int64_t h) const {
  if (z < 0 || z >= width_ || h < 1 || h > height_) {
    fail(ErrorCode::InvalidArgument,
         "SiteGrid: site (" + std::to_string(z) + ", " + std::to_string(h) + ") outside the grid");
  }
  return static_cast<std::size_t>(z * height_ + (h - 1));
}

std::int64_t SiteGrid::open_count() const {
  return std::count(bits_.begin(), bits_.end(), std::uint8_t{1});
}

SiteGrid generate_grid_blocked(std::int64_t width, std::int64_t height, double p, std::int64_t d,
                               std::uint64_t seed) {
  require(p >= 0.0 && p <= 1.0, "grid: p must lie in [0, 1]");
  SiteGrid grid(width, height, d, p, seed);
  for (std::int64_t z = 0; z < width; ++z) {
    for (std::int64_t h = 1; h <= height; ++h) {
      const std::int64_t block = (h - 1) / d;
      const double u = rng::uniform(seed, rng::Stream::Percolation, rng::word(z), rng::word(block));
      grid.set_open(z, h, u < p);
    }
  }
  return grid;
}

SiteGrid generate_grid_iid(std::int64_t width, std::int64_t height, double p, std::uint64_t seed) {
  return generate_grid_blocked(width, height, p, 1, seed);
}

bool is_open_lipschitz(const SiteGrid& grid, std::span<const std::int64_t> phi) {
  const std::int64_t W = grid.width();
  if (static_cast<std::int64_t>(phi.size()) != W) return false;
  for (std::int64_t z = 0; z < W; ++z) {
    const std::int64_t h = phi[static_cast<std::size_t>(z)];
    if (h < 1 || h > grid.height() || !grid.open(z, h)) return false;
    const std::int64_t next = phi[static_cast<std::size_t>((z + 1) % W)];
    if (std::abs(h - next) > 1) return false;
  }
  return true;
}

std::optional<LipschitzSurface> minimal_open_surface(const SiteGrid& grid,
                                                     std::span<const std::int64_t> order) {
  const std::int64_t W = grid.width();
  const std::int64_t H = grid.height();
  std::vector<std::int64_t> sweep(static_cast<std::size_t>(W));
  if (order.empty()) {
    std::iota(sweep.begin(), sweep.end(), 0);
  } else {
    require(static_cast<std::int64_t>(order.size()) == W, "sweep order must be a permutation of [0, W)");
    sweep.assign(order.begin(), order.end());
    std::vector<std::int64_t> check = sweep;
    std::sort(check.begin(), check.end());
    for (std::int64_t z = 0; z < W; ++z) {
      require(check[static_cast<std::size_t>(z)] == z, "sweep order must be a permutation of [0, W)");
    }
  }

  // next_open[z][h] = smallest open h' ≥ h, or H + 1.
  std::vector<std::int64_t> next_open(static_cast<std::size_t>(W * (H + 2)), H + 1);
  auto next_at = [&](std::int64_t z, std::int64_t h) -> std::int64_t& {
    return next_open[static_cast<std::size_t>(z * (H + 2) + h)];
  };
  for (std::int64_t z = 0; z < W; ++z) {
    for (std::int64_t h = H; h >= 1; --h) {
      next_at(z, h) = grid.open(z, h) ? h : next_at(z, h + 1);
    }
  }

  std::vector<std::int64_t> phi(static_cast<std::size_t>(W), 1);
  auto at = [&](std::int64_t z) -> std::int64_t& { return phi[static_cast<std::size_t>(((z % W) + W) % W)]; };
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::int64_t z : sweep) {
      std::int64_t h = std::max({at(z), at(z - 1) - 1, at(z + 1) - 1});
      h = next_at(z, h);
      if (h > H) return std::nullopt;
      if (h != at(z)) {
        at(z) = h;
        changed = true;
      }
    }
  }
  return LipschitzSurface{std::move(phi)};
}

std::optional<LipschitzSurface> brute_force_minimal_surface(const SiteGrid& grid, std::int64_t budget) {
  const std::int64_t W = grid.width();
  const std::int64_t H = grid.height();
  double total = std::pow(static_cast<double>(H), static_cast<double>(W));
  if (total > static_cast<double>(budget)) {
    fail(ErrorCode::BudgetExceeded, "brute force: H^W exceeds the candidate budget");
  }
  std::vector<std::int64_t> cand(static_cast<std::size_t>(W), 1);
  std::optional<std::vector<std::int64_t>> best;
  for (;;) {
    if (is_open_lipschitz(grid, cand)) {
      if (!best) {
        best = cand;
      } else {
        std::vector<std::int64_t> merged(cand.size());
        for (std::size_t z = 0; z < cand.size(); ++z) merged[z] = std::min((*best)[z], cand[z]);
        if (!is_open_lipschitz(grid, merged)) {
          throw std::logic_error("open Lipschitz surfaces not closed under pointwise minimum");
        }
        best = std::move(merged);
      }
    }
    std::size_t z = 0;
    while (z < cand.size() && cand[z] == H) cand[z++] = 1;
    if (z == cand.size()) break;
    ++cand[z];
  }
  if (!best) return std::nullopt;
  return LipschitzSurface{std::move(*best)};
}

double critical_probability(int n, int d) {
  require(n >= 1 && d >= 1, "critical_probability: n and d must be at least 1");
  return 1.0 - 1.0 / std::pow(8.0 * n, d);
}

std::optional<double> admissible_path_bound(std::int64_t h, std::int64_t z_abs, double q, int n, int d) {
  require(h >= 1 && z_abs >= 0, "admissible_path_bound: need h ≥ 1 and |z| ≥ 0");
  require(q >= 0.0 && q <= 1.0, "admissible_path_bound: q must lie in [0, 1]");
  require(n >= 1 && d >= 1, "admissible_path_bound: n and d must be at least 1");
  const double ratio = 8.0 * n * std::pow(q, 1.0 / d);
  if (ratio >= 1.0) return std::nullopt;
  return std::pow(2.0, static_cast<double>(h)) * std::pow(q, static_cast<double>(h) / d) *
         std::pow(ratio, static_cast<double>(z_abs)) / (1.0 - ratio);
}

std::int64_t enumerate_admissible_paths(const SiteGrid& grid, std::int64_t from_z, std::int64_t to_z,
                                        std::int64_t h, std::int64_t budget) {
  const std::int64_t W = grid.width();
  const std::int64_t H = grid.height();
  require(from_z >= 0 && from_z < W && to_z >= 0 && to_z < W, "path endpoints outside the grid");
  require(h >= 1 && h <= H, "target height must lie in [1, H]");
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(W * (H + 1)), 0);
  auto mark = [&](std::int64_t z, std::int64_t y) -> std::uint8_t& {
    return visited[static_cast<std::size_t>(z * (H + 1) + y)];
  };
  std::int64_t count = 0;
  std::int64_t expansions = 0;

  // Iterative DFS; each frame remembers which of its three moves comes next.
  struct Frame {
    std::int64_t z, y;
    int next_move;
  };
  std::vector<Frame> stack{{from_z, 0, 0}};
  mark(from_z, 0) = 1;
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_move == 3) {
      mark(f.z, f.y) = 0;
      stack.pop_back();
      continue;
    }
    const int move = f.next_move++;
    std::int64_t nz = f.z;
    std::int64_t ny = f.y;
    if (move == 0) {
      ny = f.y + 1;
      if (ny > H || grid.open(nz, ny)) continue;  // up-steps must end closed
    } else {
      nz = f.z + (move == 1 ? -1 : 1);
      ny = f.y - 1;
      if (ny < 0 || nz < 0 || nz >= W) continue;
    }
    if (mark(nz, ny)) continue;
    if (++expansions > budget) fail(ErrorCode::BudgetExceeded, "admissible path enumeration budget exceeded");
    if (nz == to_z && ny == h) {
      ++count;
      continue;
    }
    mark(nz, ny) = 1;
    stack.push_back({nz, ny, 0});
  }
  return count;
}

void write_grid(std::ostream& os, const SiteGrid& grid) {
  os << "# lipschitz-grid v1\n";
  os << grid.width() << ' ' << grid.height() << ' ' << grid.dependence() << ' '
     << std::setprecision(17) << grid.p() << ' ' << grid.seed() << '\n';
  for (std::int64_t z = 0; z < grid.width(); ++z) {
    bool state = false;
    std::int64_t run = 0;
    bool first = true;
    for (std::int64_t h = 1; h <= grid.height(); ++h) {
      if (grid.open(z, h) != state) {
        os << (first ? "" : " ") << run;
        first = false;
        state = !state;
        run = 0;
      }
      ++run;
    }
    os << (first ? "" : " ") << run << '\n';
  }
}

SiteGrid read_grid(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "# lipschitz-grid v1") fail(ErrorCode::Io, "read_grid: bad header");
  std::int64_t W = 0, H = 0, d = 0;
  double p = 0;
  std::uint64_t seed = 0;
  if (!std::getline(is, line)) fail(ErrorCode::Io, "read_grid: missing dimensions");
  std::istringstream dims(line);
  if (!(dims >> W >> H >> d >> p >> seed)) fail(ErrorCode::Io, "read_grid: malformed dimensions");
  SiteGrid grid(W, H, d, p, seed);
  for (std::int64_t z = 0; z < W; ++z) {
    if (!std::getline(is, line)) fail(ErrorCode::Io, "read_grid: missing column " + std::to_string(z));
    std::istringstream runs(line);
    std::int64_t run = 0;
    std::int64_t h = 1;
    bool state = false;
    while (runs >> run) {
      if (run < 0 || h + run - 1 > H) fail(ErrorCode::Io, "read_grid: run overflows column " + std::to_string(z));
      for (std::int64_t k = 0; k < run; ++k) grid.set_open(z, h++, state);
      state = !state;
    }
    if (h != H + 1) fail(ErrorCode::Io, "read_grid: column " + std::to_string(z) + " has wrong length");
  }
  return grid;
}

void write_surface(std::ostream& os, const std::optional<LipschitzSurface>& surface) {
  os << "# lipschitz-surface v1\n";
  if (!surface) {
    os << "none\n";
    return;
  }
  os << surface->phi.size() << '\n';
  for (std::size_t z = 0; z < surface->phi.size(); ++z) {
    os << (z ? " " : "") << surface->phi[z];
  }
  os << '\n';
}

std::optional<LipschitzSurface> read_surface(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "# lipschitz-surface v1") fail(ErrorCode::Io, "read_surface: bad header");
  if (!std::getline(is, line)) fail(ErrorCode::Io, "read_surface: truncated");
  if (line == "none") return std::nullopt;
  const std::int64_t n = std::stoll(line);
  LipschitzSurface s;
  s.phi.resize(static_cast<std::size_t>(n));
  for (auto& x : s.phi) {
    if (!(is >> x)) fail(ErrorCode::Io, "read_surface: truncated values");
  }
  return s;
}

}  // namespace pinning::percolation
