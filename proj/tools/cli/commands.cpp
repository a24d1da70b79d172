#include "cli/commands.hpp"

#include "cli/files.hpp"

#include <cartogram/render.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <ostream>

namespace cartogram::cli {

namespace {

using nlohmann::json;

bool is_cartogram(Mode mode) { return mode != Mode::projection; }

std::string regions_hash(const RunConfig& c, const std::string& text) {
  return sha256_hex(text + "|interruption=" + json(c.interruption_lon).dump());
}

json rules_json(const SubdivisionRules& r) {
  return {{"min_triangles_per_region", r.min_triangles_per_region},
          {"max_scaled_area", r.max_scaled_area},
          {"split_borders_once", r.split_borders_once},
          {"split_polar_cap_once", r.split_polar_cap_once},
          {"polar_cap_lat", r.polar_cap_lat},
          {"max_depth", r.max_depth}};
}

std::string mesh_key(const RunConfig& c, const std::string& regions_text) {
  json key = {{"frequency", c.mesh_frequency()}, {"kind", is_cartogram(c.mode) ? "cartogram" : "projection"}};
  if (is_cartogram(c.mode) && c.subdivide) {
    key["rules"] = rules_json(c.rules);
    key["regions"] = regions_hash(c, regions_text);
  }
  return sha256_hex(key.dump());
}

std::string settings_hash(const RunConfig& c) {
  json s = {{"mode", std::string(mode_name(c.mode))},
            {"projection", c.projection},
            {"weights",
             {c.weights.shape, c.weights.scale, c.weights.water_factor, c.weights.density_floor,
              c.boundary_weight, c.pole_weight}},
            {"antimeridian",
             {c.antimeridian.north, c.antimeridian.middle, c.antimeridian.south,
              c.antimeridian.north_lat, c.antimeridian.south_lat}},
            {"solver", {c.armijo, c.memory, c.max_halvings, c.max_steps, c.stages}},
            {"projection_mode",
             {c.projection_mode.scale_ratios, c.projection_mode.shape_weight,
              c.projection_mode.water_factor, c.projection_mode.gamma,
              c.projection_mode.max_steps, c.projection_mode.subdivide_after,
              c.projection_mode.subdivide_fraction}}};
  return sha256_hex(s.dump());
}

json parse_json(const std::string& text, const std::filesystem::path& path) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    throw InputError(path.string() + " is not valid JSON; rerun the command that writes it");
  }
}

struct LoadedMesh {
  Mesh mesh;
  std::string hash;  // of the file bytes
};

LoadedMesh load_mesh(const RunConfig& c, const std::string& regions_text) {
  const auto path = artifact_paths(c).mesh;
  if (!std::filesystem::exists(path)) {
    throw InputError("missing " + path.string() + "; run `cartogram mesh` first");
  }
  const std::string text = read_file(path);
  const json doc = parse_json(text, path);
  if (doc.value("key", "") != mesh_key(c, regions_text)) {
    throw InputError(path.string() + " is stale for this configuration; rerun `cartogram mesh`");
  }
  return {mesh_from_json(doc.at("mesh").dump()), sha256_hex(text)};
}

struct LoadedPortions {
  PortionTable table;
  std::string hash;
};

LoadedPortions load_portions(const RunConfig& c, const LoadedMesh& mesh,
                             const std::string& regions_text) {
  const auto path = artifact_paths(c).portions;
  if (!std::filesystem::exists(path)) {
    throw InputError("missing " + path.string() + "; run `cartogram portions` first");
  }
  const std::string text = read_file(path);
  CachedPortions cached = portions_from_json(text);
  if (cached.mesh_hash != mesh.hash || cached.regions_hash != regions_hash(c, regions_text) ||
      cached.table.triangle_count() != mesh.mesh.triangle_count()) {
    throw InputError(path.string() + " is stale; rerun `cartogram portions`");
  }
  return {std::move(cached.table), sha256_hex(text)};
}

std::shared_ptr<const TargetProjection> projection_of(const RunConfig& c) {
  return std::shared_ptr<const TargetProjection>(make_projection(c.projection));
}

json state_json(const State& state, int dim) {
  json out = json::array();
  for (Eigen::Index i = 0; i < state.size(); i += dim) {
    json v = json::array();
    for (int k = 0; k < dim; ++k) v.push_back(state[i + k]);
    out.push_back(std::move(v));
  }
  return out;
}

json stage_json(const StageStats& s) {
  return {{"stage", s.index},
          {"error_weight", s.error_weight},
          {"distortion_weight", s.distortion_weight},
          {"gamma", s.gamma},
          {"steps", s.steps},
          {"converged", s.converged},
          {"cost", s.cost},
          {"error", s.error},
          {"distortion", s.distortion},
          {"gradient_norm", s.gradient_norm},
          {"median_rel_error", s.median_rel_error},
          {"max_rel_error", s.max_rel_error}};
}

StageStats stage_from_json(const json& j) {
  StageStats s;
  s.index = j.at("stage").get<int>();
  s.error_weight = j.at("error_weight").get<double>();
  s.distortion_weight = j.at("distortion_weight").get<double>();
  s.gamma = j.at("gamma").get<double>();
  s.steps = j.at("steps").get<long>();
  s.converged = j.at("converged").get<bool>();
  s.cost = j.at("cost").get<double>();
  s.error = j.at("error").get<double>();
  s.distortion = j.at("distortion").get<double>();
  s.gradient_norm = j.at("gradient_norm").get<double>();
  s.median_rel_error = j.at("median_rel_error").get<double>();
  s.max_rel_error = j.at("max_rel_error").get<double>();
  return s;
}

struct LoadedResult {
  SolveResult result;
  std::vector<Triangle> triangles;
  std::vector<std::string> region_ids;
  std::optional<Mesh> mesh;
};

LoadedResult load_result(const RunConfig& c, const LoadedMesh& mesh,
                         const LoadedPortions& portions) {
  const auto path = artifact_paths(c).result;
  if (!std::filesystem::exists(path)) {
    throw InputError("missing " + path.string() + "; run `cartogram solve` first");
  }
  const json doc = parse_json(read_file(path), path);
  if (doc.value("mesh_hash", "") != mesh.hash || doc.value("portions_hash", "") != portions.hash ||
      doc.value("settings_hash", "") != settings_hash(c)) {
    throw InputError(path.string() + " is stale; rerun `cartogram solve`");
  }
  LoadedResult out;
  try {
    out.result.mode = parse_mode(doc.at("mode").get<std::string>());
    const int dim = vertex_dimension(out.result.mode);
    const auto& verts = doc.at("vertices");
    out.result.state.resize(static_cast<Eigen::Index>(verts.size()) * dim);
    for (std::size_t i = 0; i < verts.size(); ++i) {
      for (int k = 0; k < dim; ++k) out.result.state[dim * i + k] = verts[i].at(k).get<double>();
    }
    for (const auto& t : doc.at("triangles")) out.triangles.push_back(t.get<Triangle>());
    out.region_ids = doc.at("region_ids").get<std::vector<std::string>>();
    out.result.region_areas = doc.at("region_areas").get<std::vector<double>>();
    out.result.populations = doc.at("populations").get<std::vector<double>>();
    for (const auto& s : doc.at("stages")) out.result.stages.push_back(stage_from_json(s));
    if (doc.contains("mesh")) out.mesh = mesh_from_json(doc.at("mesh").dump());
  } catch (const json::exception& e) {
    throw InputError(path.string() + " is malformed (" + e.what() + "); rerun `cartogram solve`");
  }
  return out;
}

struct Inputs {
  std::string regions_text;
  RegionSet regions;
};

Inputs load_inputs(const RunConfig& c) {
  Inputs in;
  in.regions_text = read_file(c.regions);
  in.regions = read_regions_geojson(in.regions_text, c.interruption_lon);
  return in;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

ArtifactPaths artifact_paths(const RunConfig& c) {
  return {c.out / "mesh.json",    c.out / "portions.json", c.out / "result.json",
          c.out / "stages.csv",   c.out / "timings.csv",   c.out / "report.csv",
          c.out / "map.geojson",  c.out / "map.svg"};
}

void cmd_mesh(const RunConfig& c, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const Inputs in = load_inputs(c);
  Mesh mesh = build_octahedral_mesh(c.mesh_frequency());
  if (is_cartogram(c.mode) && c.subdivide) {
    mesh = subdivide_until_satisfied(mesh, in.regions, c.rules, c.threads);
  }
  const json doc = {{"key", mesh_key(c, in.regions_text)}, {"mesh", json::parse(mesh_to_json(mesh))}};
  write_file(artifact_paths(c).mesh, doc.dump() + "\n");
  log << "mesh: " << mesh.vertex_count() << " vertices, " << mesh.triangle_count()
      << " triangles (" << seconds_since(start) << " s)\n";
}

void cmd_portions(const RunConfig& c, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const Inputs in = load_inputs(c);
  const LoadedMesh mesh = load_mesh(c, in.regions_text);
  const PortionTable table = compute_portions(mesh.mesh, in.regions, c.threads);
  write_file(artifact_paths(c).portions,
             portions_to_json(table, mesh.hash, regions_hash(c, in.regions_text)) + "\n");
  log << "portions: " << in.regions.size() << " regions over " << table.triangle_count()
      << " triangles (" << seconds_since(start) << " s)\n";
}

void cmd_solve(const RunConfig& c, std::ostream& log) {
  const Inputs in = load_inputs(c);
  const LoadedMesh mesh = load_mesh(c, in.regions_text);
  const LoadedPortions portions = load_portions(c, mesh, in.regions_text);
  const auto projection = projection_of(c);

  SolverOptions options;
  options.memory = c.memory;
  options.armijo = c.armijo;
  options.max_halvings = c.max_halvings;
  options.threads = c.threads;
  if (c.verbose) options.progress = &log;

  SolveResult result;
  std::vector<Triangle> triangles = mesh.mesh.triangles;
  RegionSet regions = in.regions;
  if (is_cartogram(c.mode)) {
    CartogramOptions co;
    co.weights = c.weights;
    co.boundary_weight = c.boundary_weight;
    co.pole_weight = c.pole_weight;
    co.antimeridian = c.antimeridian;
    const CartogramProblem problem =
        cartogram_problem(mesh.mesh, regions, portions.table, c.mode, projection, co);
    triangles = problem.tables.triangles;
    StageSchedule schedule = StageSchedule::cartogram(c.stages);
    for (auto& s : schedule.stages) s.max_steps = c.max_steps;
    result = run_cartogram(problem.initial, problem.params, problem.tables, schedule, options);
  } else {
    ProjectionOptions po = c.projection_mode;
    po.pole_weight = c.pole_weight;
    po.antimeridian = c.antimeridian;
    result = run_projection(mesh.mesh, regions, std::make_shared<BlurredJacobianField>(projection),
                            po, options, &portions.table);
    if (result.mesh) triangles = result.mesh->triangles;
  }

  json doc = {{"mode", std::string(mode_name(c.mode))},
              {"projection", c.projection},
              {"mesh_hash", mesh.hash},
              {"portions_hash", portions.hash},
              {"settings_hash", settings_hash(c)},
              {"dimension", vertex_dimension(c.mode)},
              {"vertices", state_json(result.state, vertex_dimension(c.mode))},
              {"triangles", triangles},
              {"region_areas", result.region_areas},
              {"populations", result.populations}};
  std::vector<std::string> ids;
  if (is_cartogram(c.mode)) {
    for (const auto& r : regions.regions) ids.push_back(r.id);
  }
  doc["region_ids"] = ids;
  json stages = json::array();
  for (const auto& s : result.stages) stages.push_back(stage_json(s));
  doc["stages"] = std::move(stages);
  if (result.mesh) doc["mesh"] = json::parse(mesh_to_json(*result.mesh));

  const auto paths = artifact_paths(c);
  write_file(paths.result, doc.dump() + "\n");
  ErrorReport report;
  report.stages = result.stages;
  write_file(paths.stages, stages_csv(report));
  write_file(paths.timings, timings_csv(result.stages));
  for (const auto& s : result.stages) {
    log << "stage " << s.index << ": " << s.steps << " steps, max rel. error " << s.max_rel_error
        << ", " << s.seconds << " s\n";
  }
}

void cmd_render(const RunConfig& c, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const Inputs in = load_inputs(c);
  const LoadedMesh mesh = load_mesh(c, in.regions_text);
  const LoadedPortions portions = load_portions(c, mesh, in.regions_text);
  const LoadedResult loaded = load_result(c, mesh, portions);
  const Mesh& initial = loaded.mesh ? *loaded.mesh : mesh.mesh;

  MapFrame frame;
  frame.mode = loaded.result.mode;
  frame.state = loaded.result.state;
  frame.triangles = loaded.triangles;
  frame.projection = projection_of(c);

  const auto borders = map_borders(trace_regions(initial, in.regions), frame);
  std::vector<std::vector<Vec2>> graticule;
  if (c.render_graticule) {
    for (const auto& line : trace_graticule(initial, c.interruption_lon)) {
      for (auto& piece : map_line(line, frame)) graticule.push_back(std::move(piece));
    }
  }
  SvgOptions svg;
  svg.width = c.render_width;
  svg.mesh = c.render_mesh;
  svg.graticule = c.render_graticule;
  const auto paths = artifact_paths(c);
  write_file(paths.geojson, emit_geojson(borders));
  write_file(paths.svg, emit_svg(borders, svg, c.render_mesh ? map_mesh_edges(frame)
                                                              : std::vector<std::array<Vec2, 2>>{},
                                 graticule));
  log << "render: wrote " << paths.geojson.string() << " and " << paths.svg.string() << " ("
      << seconds_since(start) << " s)\n";
}

void cmd_report(const RunConfig& c, std::ostream& log) {
  const Inputs in = load_inputs(c);
  const LoadedMesh mesh = load_mesh(c, in.regions_text);
  const LoadedPortions portions = load_portions(c, mesh, in.regions_text);
  const LoadedResult loaded = load_result(c, mesh, portions);
  const auto paths = artifact_paths(c);

  if (!is_cartogram(loaded.result.mode)) {
    const Mesh& m = loaded.mesh ? *loaded.mesh : mesh.mesh;
    const PortionTable land =
        loaded.mesh ? compute_portions(m, in.regions, c.threads) : portions.table;
    const CostTables tables = projection_tables(m, c.projection_mode);
    const auto dets = triangle_determinants(loaded.result.state, Mode::projection, tables);
    std::vector<double> land_errors;
    for (std::size_t t = 0; t < dets.size(); ++t) {
      if (land.land[t] > 0.0) land_errors.push_back(std::abs(dets[t] - 1.0));
    }
    const double med = median(land_errors);
    const double worst =
        land_errors.empty() ? 0.0 : *std::max_element(land_errors.begin(), land_errors.end());
    write_file(paths.report, "land_triangles,median_abs_det_error,max_abs_det_error\n" +
                                 std::to_string(land_errors.size()) + "," + json(med).dump() +
                                 "," + json(worst).dump() + "\n");
    log << "land triangles " << land_errors.size() << ", median |det K - 1| " << med << "\n";
    return;
  }

  RegionSet regions = in.regions;
  if (loaded.region_ids.size() != regions.size()) {
    throw InputError("result does not match the region file; rerun `cartogram solve`");
  }
  const ErrorReport report = error_report(loaded.result, regions);
  write_file(paths.report, report_csv(report));
  log << "regions " << report.regions.size() << ", median |rel. error| "
      << report.median_abs_rel_error << ", max " << report.max_abs_rel_error << "\n";
}

}  // namespace cartogram::cli
