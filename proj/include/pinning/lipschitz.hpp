#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace pinning::percolation {

/// Finite (1+1)-dimensional site lattice: horizontal z ∈ [0, W) (periodic),
/// vertical h ∈ [1, H]. `dependence` is the vertical range d of the
/// d-independent family the grid was drawn from.
class SiteGrid {
 public:
  SiteGrid(std::int64_t width, std::int64_t height, std::int64_t dependence, double p = 0,
           std::uint64_t seed = 0);

  std::int64_t width() const { return width_; }
  std::int64_t height() const { return height_; }
  std::int64_t dependence() const { return dependence_; }
  double p() const { return p_; }
  std::uint64_t seed() const { return seed_; }

  bool open(std::int64_t z, std::int64_t h) const { return bits_[index(z, h)] != 0; }
  void set_open(std::int64_t z, std::int64_t h, bool is_open) { bits_[index(z, h)] = is_open ? 1 : 0; }
  std::int64_t open_count() const;

  bool operator==(const SiteGrid&) const = default;

 private:
  std::size_t index(std::int64_t z, std::int64_t h) const;

  std::int64_t width_;
  std::int64_t height_;
  std::int64_t dependence_;
  double p_;
  std::uint64_t seed_;
  std::vector<std::uint8_t> bits_;
};

/// Heights φ(z) ∈ [1, H] with |φ(z) − φ(z±1)| ≤ 1 (indices mod W).
struct LipschitzSurface {
  std::vector<std::int64_t> phi;
  bool operator==(const LipschitzSurface&) const = default;
};

/// Independent sites, open with probability p (d = 1).
SiteGrid generate_grid_iid(std::int64_t width, std::int64_t height, double p, std::uint64_t seed);

/// Vertical blocks of length d share one Bernoulli(p) state; blocks and
/// columns are independent, so sites at vertical distance ≥ d are independent.
SiteGrid generate_grid_blocked(std::int64_t width, std::int64_t height, double p, std::int64_t d,
                               std::uint64_t seed);

bool is_open_lipschitz(const SiteGrid& grid, std::span<const std::int64_t> phi);

/// Pointwise-minimal open Lipschitz surface inside [1, H] by monotone
/// push-up iteration, or nullopt when some column would have to exceed H.
/// `order` (a permutation of [0, W)) fixes the sweep order; the fixed point
/// does not depend on it.
std::optional<LipschitzSurface> minimal_open_surface(const SiteGrid& grid,
                                                     std::span<const std::int64_t> order = {});

/// Exhaustive reference over all H^W height functions.
std::optional<LipschitzSurface> brute_force_minimal_surface(const SiteGrid& grid,
                                                            std::int64_t budget = 1'000'000);

/// p₀(n, d) = 1 − (8n)^{−d}.
double critical_probability(int n, int d);

/// 2^h q^{h/d} (8n q^{1/d})^{|z|} / (1 − 8n q^{1/d}); nullopt when
/// 8n q^{1/d} ≥ 1 (the series diverges).
std::optional<double> admissible_path_bound(std::int64_t h, std::int64_t z_abs, double q, int n, int d);

/// Number of admissible λ-paths (distinct vertices; unit steps up onto closed
/// sites, or diagonal steps down) from (from_z, 0) to (to_z, h), restricted
/// to columns [0, W) without wrap and heights [0, H].
std::int64_t enumerate_admissible_paths(const SiteGrid& grid, std::int64_t from_z, std::int64_t to_z,
                                        std::int64_t h, std::int64_t budget = 50'000'000);

/// Text format: header line with W H d p seed, then one line per column with
/// alternating closed/open run lengths over h = 1..H (first run is closed,
/// possibly empty).
void write_grid(std::ostream& os, const SiteGrid& grid);
SiteGrid read_grid(std::istream& is);

void write_surface(std::ostream& os, const std::optional<LipschitzSurface>& surface);
std::optional<LipschitzSurface> read_surface(std::istream& is);

}  // namespace pinning::percolation
