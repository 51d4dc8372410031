#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace pinning::harness {

enum class Kind { DiscreteBuild, DiscreteSimulate, AlphaEstimate, Percolation, ContinuumBuild, Sweep };

std::optional<Kind> kind_from_string(std::string_view name);
const char* to_string(Kind kind);

struct SweepAxis {
  std::string path;  // dotted path into params, e.g. "distribution.bernoulli_p"
  std::vector<nlohmann::json> values;
};

struct ExperimentConfig {
  Kind kind = Kind::DiscreteBuild;
  /// For sweeps: the experiment run at every grid point.
  Kind base_kind = Kind::DiscreteBuild;
  nlohmann::json params = nlohmann::json::object();
  std::vector<SweepAxis> axes;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir;
  bool emit_svg = false;
  int jobs = 1;
};

struct Overrides {
  /// Kind selected on the command line; must agree with the document's
  /// "kind" when both are present.
  std::optional<Kind> kind;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::int64_t> seed_count;
  std::optional<int> jobs;
  bool emit_svg = false;
};

/// Parses and validates a configuration document. Every problem is reported
/// as one "field: message" line in a Config error; nothing runs until the
/// whole configuration (every sweep point included) is valid.
///
///   {"kind": "discrete-build", "seeds": [1, 2] | {"base": 0, "count": 20},
///    "output": "out", "emit_svg": false, "jobs": 1,
///    "params": {...}, "base_kind": "...", "grid": {"path": [values...]}}
ExperimentConfig parse_config(const nlohmann::json& doc, const Overrides& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

struct ManifestEntry {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct Manifest {
  std::vector<ManifestEntry> files;
  std::int64_t tasks = 0;
  std::int64_t failed_tasks = 0;
  std::int64_t skipped_tasks = 0;  // sweep rows already present
};

/// Runs every (grid point, seed) task, writes per-run JSON documents and
/// artifacts, a consolidated CSV, and manifest.json. Failures of single tasks
/// are recorded in their rows; I/O failures on the consolidated outputs throw.
Manifest run(const ExperimentConfig& config);

std::string sha256_hex(const std::filesystem::path& file);
nlohmann::json manifest_to_json(const Manifest& m);

/// Summary columns written for each kind (after any sweep axis columns).
std::vector<std::string> summary_columns(Kind kind);

/// CSV helpers shared with the tests.
std::string csv_escape(const std::string& cell);
std::vector<std::string> csv_split(const std::string& line);

}  // namespace pinning::harness
