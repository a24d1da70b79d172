#pragma once

#include "cli/config.hpp"

#include <filesystem>
#include <iosfwd>

namespace cartogram::cli {

/// Files every command reads or writes under the output directory.
struct ArtifactPaths {
  std::filesystem::path mesh;
  std::filesystem::path portions;
  std::filesystem::path result;
  std::filesystem::path stages;
  std::filesystem::path timings;
  std::filesystem::path report;
  std::filesystem::path geojson;
  std::filesystem::path svg;
};

ArtifactPaths artifact_paths(const RunConfig& config);

/// Each command checks the content hashes of its upstream artifacts and
/// throws InputError (naming the command to rerun) when one is missing or
/// stale. `log` receives human-readable notes and wall times.
void cmd_mesh(const RunConfig& config, std::ostream& log);
void cmd_portions(const RunConfig& config, std::ostream& log);
void cmd_solve(const RunConfig& config, std::ostream& log);
void cmd_render(const RunConfig& config, std::ostream& log);
void cmd_report(const RunConfig& config, std::ostream& log);

}  // namespace cartogram::cli
