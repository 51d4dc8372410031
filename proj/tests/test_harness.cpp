#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "pinning/error.hpp"
#include "pinning/harness.hpp"
#include "pinning/svg.hpp"

using namespace pinning;
using namespace pinning::harness;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pinning_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Data rows of a CSV written by the harness, as header → cell maps.
std::vector<std::map<std::string, std::string>> read_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = csv_split(line);
    if (header.empty()) {
      header = cells;
      continue;
    }
    std::map<std::string, std::string> row;
    for (std::size_t k = 0; k < header.size() && k < cells.size(); ++k) row[header[k]] = cells[k];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string config_error(const json& doc, const Overrides& ov = {}) {
  try {
    (void)parse_config(doc, ov);
  } catch (const PinningError& e) {
    CHECK(e.code() == ErrorCode::Config);
    return e.what();
  }
  FAIL("configuration was accepted");
  return {};
}

json alpha_config(const fs::path& out) {
  return {{"kind", "alpha-estimate"},
          {"seeds", {1, 2}},
          {"output", out.string()},
          {"params", {{"distribution", {{"bernoulli_p", "0.5"}}}, {"samples", 100000}}}};
}

}  // namespace

TEST_CASE("configuration errors are reported per field") {
  const fs::path out = scratch("cfg");
  json doc = alpha_config(out);

  doc["seeds"] = json::array();
  CHECK(config_error(doc).find("seeds: must not be empty") != std::string::npos);

  doc = alpha_config(out);
  doc["seeds"] = {3, 3};
  CHECK(config_error(doc).find("duplicate") != std::string::npos);

  doc = alpha_config(out);
  doc["colour"] = "red";
  doc["params"]["samples"] = -5;
  const std::string both = config_error(doc);
  CHECK(both.find("colour: unknown field") != std::string::npos);
  CHECK(both.find("params.samples") != std::string::npos);

  doc = alpha_config(out);
  doc["params"]["distribution"] = {{"atoms", json::array({{"1", "0.5"}, {"0", "0.4"}})}};
  CHECK(config_error(doc).find("params.distribution") != std::string::npos);

  const json perc = {{"kind", "percolation"}, {"seeds", {1}}, {"output", out.string()}, {"params", json::object()}};
  CHECK(config_error(perc).find("params.p: required") != std::string::npos);

  doc = alpha_config(out);
  doc.erase("output");
  CHECK(config_error(doc).find("output") != std::string::npos);
  Overrides with_out;
  with_out.output_dir = out;
  CHECK_NOTHROW(parse_config(doc, with_out));

  Overrides other;
  other.kind = Kind::Percolation;
  CHECK(config_error(alpha_config(out), other).find("kind") != std::string::npos);

  json sweep = {{"kind", "sweep"},
                {"base_kind", "alpha-estimate"},
                {"seeds", {{"base", 0}, {"count", 3}}},
                {"output", out.string()},
                {"params", {{"distribution", {{"bernoulli_p", "0.5"}}}, {"samples", 100}}},
                {"grid", {{"distribution.bernoulli_p", {"0.3", "1.7"}}}}};
  CHECK(config_error(sweep).find("distribution") != std::string::npos);
  sweep["grid"] = {{"distribution.bernoulli_p", {"0.3", "0.7"}}};
  const ExperimentConfig ok = parse_config(sweep);
  CHECK(ok.seeds == std::vector<std::uint64_t>{0, 1, 2});
  CHECK(ok.axes.size() == 1);
  Overrides count;
  count.seed_count = 5;
  CHECK(parse_config(sweep, count).seeds.size() == 5);
  // Nothing was written while validating.
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("config files allow comments") {
  const fs::path dir = scratch("file");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << "// estimate\n" << alpha_config(dir / "out").dump(1) << "\n";
  CHECK(load_config(dir / "c.json").kind == Kind::AlphaEstimate);
  std::ofstream(dir / "bad.json") << "{ nope";
  CHECK_THROWS_AS(load_config(dir / "bad.json"), PinningError);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), PinningError);
}

TEST_CASE("alpha estimate run, reruns and manifest") {
  const fs::path a = scratch("alpha_a"), b = scratch("alpha_b");
  const Manifest ma = run(parse_config(alpha_config(a)));
  CHECK(ma.tasks == 2);
  CHECK(ma.failed_tasks == 0);
  const auto rows = read_rows(a / "results.csv");
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    CHECK(row.at("status") == "ok");
    const double est = std::stod(row.at("estimate")), se = std::stod(row.at("std_error"));
    CHECK(std::fabs(est - 0.25) <= 3 * se);
    CHECK(std::stod(row.at("exact")) == doctest::Approx(0.25));
    CHECK(row.at("pinning_satisfied") == "true");
  }
  CHECK(slurp(a / "results.csv").rfind("# schema=1\n", 0) == 0);

  // Byte-identical rerun into a second directory.
  const Manifest mb = run(parse_config(alpha_config(b)));
  REQUIRE(ma.files.size() == mb.files.size());
  for (std::size_t k = 0; k < ma.files.size(); ++k) {
    CHECK(ma.files[k].path == mb.files[k].path);
    CHECK(slurp(a / ma.files[k].path) == slurp(b / mb.files[k].path));
  }
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));

  // Checksums match the contents, and the digest itself is standard SHA-256.
  for (const auto& f : ma.files) {
    CHECK(sha256_hex(a / f.path) == f.sha256);
    CHECK(fs::file_size(a / f.path) == f.bytes);
  }
  std::ofstream(a / "abc.txt", std::ios::binary) << "abc";
  CHECK(sha256_hex(a / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const json mj = json::parse(slurp(a / "manifest.json"));
  CHECK(mj.at("files").size() == ma.files.size());
  CHECK(fs::exists(a / "run_1.json"));
  CHECK(json::parse(slurp(a / "run_1.json")).at("summary").contains("estimate"));
}

TEST_CASE("build then simulate with a shared seed") {
  const fs::path out = scratch("pipeline");
  const json dist = {{"bernoulli_p", "0.6"}};
  const json build = {{"kind", "discrete-build"},
                      {"seeds", {7}},
                      {"output", (out / "build").string()},
                      {"emit_svg", true},
                      {"params", {{"distribution", dist}, {"half_width", 200}, {"n_start", 50}}}};
  const Manifest mb = run(parse_config(build));
  CHECK(mb.failed_tasks == 0);
  const auto brow = read_rows(out / "build" / "results.csv").at(0);
  CHECK(brow.at("violations") == "0");
  CHECK(brow.at("nonnegative") == "true");
  CHECK(fs::exists(out / "build" / "path_7.txt"));
  CHECK(fs::exists(out / "build" / "path_7.svg"));

  const json sim = {{"kind", "discrete-simulate"},
                    {"seeds", {7}},
                    {"output", (out / "sim").string()},
                    {"emit_svg", true},
                    {"params", {{"distribution", dist}, {"width", 64}, {"horizon", 100}, {"n_start", 50}}}};
  CHECK(run(parse_config(sim)).failed_tasks == 0);
  const json doc = json::parse(slurp(out / "sim" / "run_7.json"));
  CHECK(doc.at("summary").at("comparison") == "ok");
  CHECK(doc.at("comparison") == "ok");
  CHECK(doc.contains("max_height_series"));
  CHECK(read_rows(out / "sim" / "results.csv").at(0).at("comparison") == "ok");
  CHECK(fs::exists(out / "sim" / "height_7.svg"));
}

TEST_CASE("failed tasks are recorded without stopping the run") {
  const fs::path out = scratch("failing");
  const json cfg = {
      {"kind", "discrete-build"},
      {"seeds", {1, 2, 3}},
      {"output", out.string()},
      {"params",
       {{"distribution", {{"atoms", json::array({{"0", "0.001"}, {"minus_inf", "0.999"}})}}}, {"half_width", 50}, {"vertical_budget", 2}}}};
  const Manifest m = run(parse_config(cfg));
  CHECK(m.tasks == 3);
  CHECK(m.failed_tasks == 3);
  for (const auto& row : read_rows(out / "results.csv")) {
    CHECK(row.at("status") == "error");
    CHECK_FALSE(row.at("error").empty());
  }
}

TEST_CASE("percolation and continuum artifacts") {
  const fs::path out = scratch("artifacts");
  const json perc = {{"kind", "percolation"},
                     {"seeds", {1, 2}},
                     {"output", (out / "perc").string()},
                     {"emit_svg", true},
                     {"params", {{"width", 40}, {"height", 20}, {"p", 0.9}, {"d", 2}}}};
  const Manifest mp = run(parse_config(perc));
  CHECK(mp.failed_tasks == 0);
  CHECK(fs::exists(out / "perc" / "grid_1.txt"));
  CHECK(fs::exists(out / "perc" / "surface_2.txt"));

  const json cont = {{"kind", "continuum-build"},
                     {"seeds", {1}},
                     {"output", (out / "cont").string()},
                     {"emit_svg", true},
                     {"params", {{"columns", 6}, {"rows", 5}}}};
  const Manifest mc = run(parse_config(cont));
  CHECK(mc.failed_tasks == 0);
  const auto row = read_rows(out / "cont" / "results.csv").at(0);
  CHECK(row.at("outcome") == "ok");
  CHECK(row.at("residual_violations") == "0");
  for (const char* f : {"v_1.json", "report_1.json", "obstacles_1.csv", "continuum_1.svg"}) {
    CHECK(fs::exists(out / "cont" / f));
  }
  CHECK(slurp(out / "cont" / "obstacles_1.csv").rfind("# schema=1\nx,y,sign\n", 0) == 0);
  bool listed = false;
  for (const auto& f : mc.files) listed |= f.path == "continuum_1.svg";
  CHECK(listed);
}

TEST_CASE("sweep over p crosses zero and resumes") {
  const fs::path out = scratch("sweep");
  const json cfg = {{"kind", "sweep"},
                    {"base_kind", "alpha-estimate"},
                    {"seeds", {{"base", 0}, {"count", 50}}},
                    {"output", out.string()},
                    {"jobs", 2},
                    {"params", {{"distribution", {{"bernoulli_p", "0.5"}}}, {"samples", 2000}}},
                    {"grid", {{"distribution.bernoulli_p", {"0.30", "0.45", "0.60"}}}}};
  const Manifest m = run(parse_config(cfg));
  CHECK(m.tasks == 150);
  CHECK(m.skipped_tasks == 0);
  const auto summary = read_rows(out / "sweep_summary.csv");
  REQUIRE(summary.size() == 3);
  const double at30 = std::stod(summary[0].at("mean_estimate"));
  const double at45 = std::stod(summary[1].at("mean_estimate"));
  const double at60 = std::stod(summary[2].at("mean_estimate"));
  CHECK(at30 < 0);
  CHECK(at45 > 0);
  CHECK(at60 > at45);
  CHECK(summary[0].at("ok") == "50");
  CHECK(fs::exists(out / "point_2" / "run_49.json"));

  // Drop the last row and resume: only that task runs again.
  const std::string full = slurp(out / "sweep.csv");
  std::string cut = full.substr(0, full.size() - 1);
  cut = cut.substr(0, cut.rfind('\n') + 1);
  std::ofstream(out / "sweep.csv", std::ios::binary) << cut;
  const Manifest again = run(parse_config(cfg));
  CHECK(again.skipped_tasks == 149);
  CHECK(slurp(out / "sweep.csv") == full);

  // A different axis layout refuses to mix with the old file.
  json other = cfg;
  other["grid"] = {{"samples", {100}}};
  CHECK_THROWS_AS(run(parse_config(other)), PinningError);
}

TEST_CASE("a single-point sweep matches a plain run") {
  const fs::path a = scratch("single_run"), b = scratch("single_sweep");
  const json params = {{"distribution", {{"bernoulli_p", "0.4"}}}, {"samples", 3000}};
  const json plain = {{"kind", "alpha-estimate"}, {"seeds", {4, 5}}, {"output", a.string()}, {"params", params}};
  const json sweep = {{"kind", "sweep"},
                      {"base_kind", "alpha-estimate"},
                      {"seeds", {4, 5}},
                      {"output", b.string()},
                      {"params", params},
                      {"grid", {{"samples", {3000}}}}};
  run(parse_config(plain));
  run(parse_config(sweep));
  const auto ra = read_rows(a / "results.csv"), rb = read_rows(b / "sweep.csv");
  REQUIRE(ra.size() == rb.size());
  for (std::size_t k = 0; k < ra.size(); ++k) {
    for (const auto& [col, v] : ra[k]) CHECK(rb[k].at(col) == v);
  }
  CHECK(slurp(a / "run_4.json") == slurp(b / "point_0" / "run_4.json"));
}

TEST_CASE("height at the horizon grows with the force") {
  const fs::path out = scratch("force");
  const json cfg = {{"kind", "sweep"},
                    {"base_kind", "discrete-simulate"},
                    {"seeds", {{"base", 0}, {"count", 8}}},
                    {"output", out.string()},
                    {"params",
                     {{"distribution", {{"bernoulli_p", "0.6"}}}, {"width", 64}, {"horizon", 50}, {"compare", false}}},
                    {"grid", {{"F", {-2, 0, 2}}}}};
  run(parse_config(cfg));
  const auto summary = read_rows(out / "sweep_summary.csv");
  REQUIRE(summary.size() == 3);
  const double lo = std::stod(summary[0].at("mean_final_max_height"));
  const double mid = std::stod(summary[1].at("mean_final_max_height"));
  const double hi = std::stod(summary[2].at("mean_final_max_height"));
  CHECK(lo <= mid);
  CHECK(mid <= hi);
  CHECK(lo < hi);
}

TEST_CASE("svg rendering") {
  using plot::Series;
  Series line{"v", Series::Kind::Line, "path", {{0, 0}, {1, 1}, {2, 4}}};
  Series dots{"obstacles", Series::Kind::Points, "obstacle", {{0.5, 0.2}, {1.5, 2.0}}};
  Series neg{"negatives", Series::Kind::Points, "negative", {{1, 3}}};
  const std::vector<Series> all{line, dots, neg};
  const std::string svg = plot::render_svg(all, {"title", "x", "y"});
  auto count = [&](const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = svg.find(needle); pos != std::string::npos; pos = svg.find(needle, pos + 1)) ++n;
    return n;
  };
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(count("<polyline") == 1);
  CHECK(count("<circle") == 3);
  CHECK(svg.find("<style") != std::string::npos);
  CHECK(svg.find("class=\"obstacle\"") != std::string::npos);
  CHECK(svg.find("class=\"negative\"") != std::string::npos);
  CHECK(svg.find("href") == std::string::npos);
  CHECK(svg.find("<!--") == std::string::npos);
  CHECK(plot::render_svg(all, {"title", "x", "y"}) == svg);
  plot::Style stamped{"title", "x", "y"};
  stamped.timestamp = true;
  CHECK(plot::render_svg(all, stamped).find("<!--") != std::string::npos);
  CHECK_THROWS_AS(plot::render_svg({}, {}), PinningError);
  const std::vector<Series> empty{{"e", Series::Kind::Line, "path", {}}};
  CHECK_THROWS_AS(plot::render_svg(empty, {}), PinningError);
}

TEST_CASE("csv helpers") {
  for (const std::string s : {"plain", "with,comma", "with \"quote\"", ""}) {
    const std::string line = csv_escape(s) + "," + csv_escape("x");
    CHECK(csv_split(line) == std::vector<std::string>{s, "x"});
  }
  CHECK(csv_escape("a,b") == "\"a,b\"");
}
