#pragma once

#include <cartogram/cost.hpp>
#include <cartogram/optimizer.hpp>
#include <cartogram/regions.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace cartogram::cli {

/// Everything one pipeline run needs.
struct RunConfig {
  std::filesystem::path regions;  // GeoJSON regions (or land mask in projection mode)
  std::filesystem::path out = "out";
  Mode mode = Mode::plane;
  std::string projection = "mollweide";
  std::optional<int> frequency;  // default depends on mode
  double interruption_lon = -169.0;
  bool subdivide = true;
  SubdivisionRules rules;
  WeightConfig weights;
  double boundary_weight = 1e-6;
  double pole_weight = 1e3;
  AntimeridianProfile antimeridian;
  double armijo = 0.1;
  int memory = 10;
  int max_halvings = 60;
  long max_steps = 200'000;
  int stages = 10;
  ProjectionOptions projection_mode;
  bool render_mesh = false;
  bool render_graticule = true;
  double render_width = 1000.0;
  int threads = 1;
  bool verbose = false;
  // Set when the config file names mode-specific weights explicitly.
  bool boundary_weight_set = false;
  bool sphere_penalties_set = false;

  int mesh_frequency() const;
};

/// Command-line values that override the config file.
struct Overrides {
  std::optional<std::filesystem::path> config;
  std::optional<std::string> mode;
  std::optional<std::string> projection;
  std::optional<int> stages;
  std::optional<int> threads;
  std::optional<std::filesystem::path> out;
  bool verbose = false;
};

/// Parses the JSON config; relative paths resolve against `base_dir`.
/// Throws ConfigError naming the offending field.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);

/// Reads --config (if any), applies overrides and validates.
RunConfig load_config(const Overrides& overrides);

/// Throws ConfigError naming the offending field.
void validate(const RunConfig& config);

}  // namespace cartogram::cli
