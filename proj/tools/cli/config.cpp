#include "cli/config.hpp"

#include "cli/files.hpp"

#include <cartogram/projections.hpp>

#include <nlohmann/json.hpp>

#include <set>

namespace cartogram::cli {

namespace {

using nlohmann::json;

// Reads only the listed keys and rejects anything else, so typos surface
// as errors instead of silently falling back to defaults.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& target) {
    seen_.insert(key);
    if (!node_.contains(key)) return;
    try {
      target = node_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name(key) + ": wrong type");
    }
  }

  bool has(const char* key) const { return node_.contains(key); }
  const json& at(const char* key) {
    seen_.insert(key);
    return node_.at(key);
  }
  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) throw ConfigError(name(key.c_str()) + ": unknown field");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

int RunConfig::mesh_frequency() const {
  if (frequency) return *frequency;
  return mode == Mode::projection ? 48 : 16;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c;
  Section top(doc, "");
  std::string regions, out, mode;
  top.read("regions", regions);
  top.read("out", out);
  top.read("mode", mode);
  top.read("projection", c.projection);
  int frequency = 0;
  top.read("frequency", frequency);
  if (top.has("frequency")) c.frequency = frequency;
  top.read("interruption_lon", c.interruption_lon);
  top.read("subdivide", c.subdivide);
  top.read("stages", c.stages);
  top.read("threads", c.threads);
  top.read("verbose", c.verbose);
  if (!regions.empty()) c.regions = resolve(base_dir, regions);
  if (!out.empty()) c.out = resolve(base_dir, out);
  if (!mode.empty()) c.mode = parse_mode(mode);

  std::set<std::string> explicit_weights;
  if (top.has("weights")) {
    Section w(top.at("weights"), "weights");
    for (const auto& [key, value] : top.at("weights").items()) explicit_weights.insert(key);
    w.read("alpha_shape", c.weights.shape);
    w.read("alpha_scale", c.weights.scale);
    w.read("water_factor", c.weights.water_factor);
    w.read("density_floor", c.weights.density_floor);
    w.read("boundary", c.boundary_weight);
    w.read("pole", c.pole_weight);
    if (w.has("antimeridian")) {
      Section a(w.at("antimeridian"), "weights.antimeridian");
      double north_lat = rad_to_deg(c.antimeridian.north_lat);
      double south_lat = rad_to_deg(c.antimeridian.south_lat);
      a.read("north", c.antimeridian.north);
      a.read("middle", c.antimeridian.middle);
      a.read("south", c.antimeridian.south);
      a.read("north_lat", north_lat);
      a.read("south_lat", south_lat);
      a.finish();
      c.antimeridian.north_lat = deg_to_rad(north_lat);
      c.antimeridian.south_lat = deg_to_rad(south_lat);
      c.projection_mode.antimeridian = c.antimeridian;
    }
    w.finish();
  }
  c.boundary_weight_set = explicit_weights.count("boundary") > 0;
  c.sphere_penalties_set =
      explicit_weights.count("pole") > 0 || explicit_weights.count("antimeridian") > 0;
  c.projection_mode.pole_weight = c.pole_weight;

  if (top.has("solver")) {
    Section s(top.at("solver"), "solver");
    s.read("armijo", c.armijo);
    s.read("memory", c.memory);
    s.read("max_halvings", c.max_halvings);
    s.read("max_steps", c.max_steps);
    s.finish();
  }
  if (top.has("subdivision")) {
    Section s(top.at("subdivision"), "subdivision");
    double cap = rad_to_deg(c.rules.polar_cap_lat);
    s.read("min_triangles_per_region", c.rules.min_triangles_per_region);
    s.read("max_scaled_area", c.rules.max_scaled_area);
    s.read("split_borders_once", c.rules.split_borders_once);
    s.read("split_polar_cap_once", c.rules.split_polar_cap_once);
    s.read("polar_cap_lat", cap);
    s.read("max_depth", c.rules.max_depth);
    s.finish();
    c.rules.polar_cap_lat = deg_to_rad(cap);
  }
  if (top.has("projection_mode")) {
    Section p(top.at("projection_mode"), "projection_mode");
    p.read("scale_ratios", c.projection_mode.scale_ratios);
    p.read("shape_weight", c.projection_mode.shape_weight);
    p.read("water_factor", c.projection_mode.water_factor);
    p.read("gamma", c.projection_mode.gamma);
    p.read("max_steps", c.projection_mode.max_steps);
    p.read("subdivide_after", c.projection_mode.subdivide_after);
    p.read("subdivide_fraction", c.projection_mode.subdivide_fraction);
    p.finish();
  }
  if (top.has("render")) {
    Section r(top.at("render"), "render");
    r.read("mesh", c.render_mesh);
    r.read("graticule", c.render_graticule);
    r.read("width", c.render_width);
    r.finish();
  }
  top.finish();
  return c;
}

RunConfig load_config(const Overrides& o) {
  RunConfig c;
  if (o.config) {
    const auto base = o.config->has_parent_path() ? o.config->parent_path()
                                                   : std::filesystem::path(".");
    c = parse_config(read_file(*o.config), base);
  }
  if (o.mode) c.mode = parse_mode(*o.mode);
  if (o.projection) c.projection = *o.projection;
  if (o.stages) c.stages = *o.stages;
  if (o.threads) c.threads = *o.threads;
  if (o.out) c.out = *o.out;
  if (o.verbose) c.verbose = true;
  validate(c);
  return c;
}

void validate(const RunConfig& c) {
  if (c.regions.empty()) throw ConfigError("regions: path to a GeoJSON file is required");
  make_projection(c.projection);
  if (c.mesh_frequency() < 1) throw ConfigError("frequency: must be a positive integer");
  if (c.stages < 1) throw ConfigError("stages: must be at least 1");
  if (c.threads < 1) throw ConfigError("threads: must be at least 1");
  if (c.memory < 1) throw ConfigError("solver.memory: must be at least 1");
  if (!(c.armijo > 0.0 && c.armijo < 1.0)) throw ConfigError("solver.armijo: must lie in (0, 1)");
  if (c.max_halvings < 1) throw ConfigError("solver.max_halvings: must be at least 1");
  if (c.max_steps < 1) throw ConfigError("solver.max_steps: must be at least 1");
  if (c.weights.shape < 0.0 || c.weights.scale < 0.0 || c.weights.water_factor < 0.0 ||
      c.weights.density_floor < 0.0 || c.boundary_weight < 0.0 || c.pole_weight < 0.0) {
    throw ConfigError("weights: must be non-negative");
  }
  if (c.boundary_weight_set && c.mode != Mode::plane) {
    throw ConfigError("weights.boundary: only used in plane mode");
  }
  if (c.sphere_penalties_set && c.mode != Mode::hybrid && c.mode != Mode::projection) {
    throw ConfigError("weights.pole: pole and antimeridian weights only apply to hybrid and "
                      "projection modes");
  }
  if (c.interruption_lon < -180.0 || c.interruption_lon > 180.0) {
    throw ConfigError("interruption_lon: must lie in [-180, 180]");
  }
  if (c.projection_mode.scale_ratios.empty()) {
    throw ConfigError("projection_mode.scale_ratios: must not be empty");
  }
  if (!(c.projection_mode.gamma > 0.0)) throw ConfigError("projection_mode.gamma: must be positive");
  if (!(c.render_width > 0.0)) throw ConfigError("render.width: must be positive");
}

}  // namespace cartogram::cli
