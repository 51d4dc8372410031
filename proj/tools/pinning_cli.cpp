// Command-line front end. Links only the C interface of libpinning.
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pinning/pinning.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRun = 3;

struct RunFlags {
  std::string config;
  std::string out;
  long long seeds = 0;
  int jobs = 0;
  bool svg = false;
};

int run_experiment(const std::string& kind, const RunFlags& f) {
  pin_run_options opts{};
  opts.kind = kind.c_str();
  opts.out_dir = f.out.empty() ? nullptr : f.out.c_str();
  opts.seed_count = f.seeds;
  opts.jobs = f.jobs;
  opts.emit_svg = f.svg ? 1 : 0;

  char* manifest = nullptr;
  const pin_status st = pin_experiment_run_file(f.config.c_str(), &opts, &manifest);
  if (st != PIN_OK) {
    std::cerr << "error (" << pin_status_name(st) << "): " << pin_last_error() << "\n";
    return st == PIN_ERR_CONFIG ? kExitConfig : kExitRun;
  }
  const auto doc = nlohmann::json::parse(manifest);
  pin_string_free(manifest);
  const auto failed = doc.at("failed_tasks").get<long long>();
  std::cout << kind << ": " << doc.at("tasks").get<long long>() << " tasks, " << failed << " failed, "
            << doc.at("skipped_tasks").get<long long>() << " reused; " << doc.at("files").size()
            << " files listed in manifest.json\n";
  return failed == 0 ? 0 : kExitRun;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pinning of interfaces in random media: supersolutions, dynamics, percolation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pin_version()));

  RunFlags flags;
  const char* kinds[] = {"discrete-build", "discrete-simulate", "alpha-estimate",
                         "percolation",    "continuum-build",   "sweep"};
  const char* blurbs[] = {
      "construct stationary discrete supersolutions and verify them",
      "simulate the interface dynamics below a constructed barrier",
      "estimate E[max_k (Z_k - k)] by Monte Carlo and exactly",
      "minimal open Lipschitz surfaces on random site grids",
      "build and verify the continuum piecewise-parabolic supersolution",
      "run another experiment kind over a parameter grid"};
  std::string chosen;
  for (std::size_t k = 0; k < std::size(kinds); ++k) {
    auto* sub = app.add_subcommand(kinds[k], blurbs[k]);
    sub->add_option("--config", flags.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "output directory (overrides the config)");
    sub->add_option("--seeds", flags.seeds, "number of seeds (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_option("--jobs", flags.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--svg", flags.svg, "also write SVG plots");
    sub->callback([&chosen, name = std::string(kinds[k])] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  return run_experiment(chosen, flags);
}
