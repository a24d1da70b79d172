#include "cli/commands.hpp"

#include <cartogram/distortion.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kUsageError = 2;
constexpr int kNumericError = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace cartogram;

  CLI::App app{"Contiguous cartograms and optimized map projections on a triangle mesh"};
  app.require_subcommand(1);
  cli::Overrides overrides;
  std::string config;
  std::string mode;
  std::string projection;
  int stages = 0;
  int threads = 0;
  std::string out;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON config file");
    sub->add_option("--mode", mode, "plane, sphere, hybrid or projection");
    sub->add_option("--projection", projection, "mollweide or equal-earth");
    sub->add_option("--stages", stages, "number of solver stages");
    sub->add_option("--threads", threads, "worker threads for cost evaluation");
    sub->add_option("--out", out, "output directory");
    sub->add_flag("--verbose", overrides.verbose, "print one line per solver step");
  };
  auto* mesh = app.add_subcommand("mesh", "build (and subdivide) the initial mesh");
  auto* portions = app.add_subcommand("portions", "compute region portions per triangle");
  auto* solve = app.add_subcommand("solve", "run the optimization");
  auto* render = app.add_subcommand("render", "write GeoJSON and SVG maps");
  auto* report = app.add_subcommand("report", "write the per-region error report");
  for (auto* sub : {mesh, portions, solve, render, report}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  if (!config.empty()) overrides.config = config;
  if (!mode.empty()) overrides.mode = mode;
  if (!projection.empty()) overrides.projection = projection;
  for (auto* sub : {mesh, portions, solve, render, report}) {
    if (sub->count("--stages")) overrides.stages = stages;
    if (sub->count("--threads")) overrides.threads = threads;
  }
  if (!out.empty()) overrides.out = out;

  try {
    const cli::RunConfig cfg = cli::load_config(overrides);
    if (*mesh) cli::cmd_mesh(cfg, std::cerr);
    if (*portions) cli::cmd_portions(cfg, std::cerr);
    if (*solve) cli::cmd_solve(cfg, std::cerr);
    if (*render) cli::cmd_render(cfg, std::cerr);
    if (*report) cli::cmd_report(cfg, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ContractViolation& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kNumericError;
  } catch (const Error& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return kNumericError;
  }
  return 0;
}
