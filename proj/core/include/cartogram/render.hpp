#pragma once

#include "cartogram/cost.hpp"
#include "cartogram/mesh.hpp"
#include "cartogram/optimizer.hpp"
#include "cartogram/projections.hpp"
#include "cartogram/regions.hpp"

#include <string>
#include <vector>

namespace cartogram {

/// A polyline on the initial sphere, split wherever it crosses a triangle
/// edge so that every segment lies in one triangle. points[i] to
/// points[i + 1] lies in triangle segment_triangle[i], and
/// segment_barycentric[i] holds both endpoints' radial barycentric
/// coordinates in that triangle.
struct TracedLine {
  std::vector<Vec3> points;
  std::vector<std::size_t> segment_triangle;
  std::vector<std::array<Vec3, 2>> segment_barycentric;
  bool closed = false;
};

struct TracedPolygon {
  std::vector<TracedLine> rings;  // outer first
};

struct TracedRegion {
  std::string id;
  std::vector<TracedPolygon> polygons;
};

/// Densifies `points` so that no arc is longer than `max_arc` radians and
/// splits it at every triangle edge of `mesh`. Throws GeometryError if a
/// point lies in no triangle.
TracedLine trace_polyline(const Mesh& mesh, std::span<const Vec3> points, bool closed,
                          double max_arc);

/// Traces every ring of every region with max_arc = 1/4 of the shortest
/// mesh edge.
std::vector<TracedRegion> trace_regions(const Mesh& mesh, const RegionSet& regions);

/// Barycentric coordinates of the radial projection of p onto the plane of
/// (a, b, c): [a b c]^-1 p normalized to sum 1.
Vec3 radial_barycentric(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Where the optimized mesh lives and how to flatten it.
struct MapFrame {
  Mode mode = Mode::plane;
  State state;
  /// Triangles indexing `state`, in the same order as the initial mesh.
  std::vector<Triangle> triangles;
  /// Final projection for sphere, hybrid and projection modes.
  std::shared_ptr<const TargetProjection> projection;
};

struct MappedRegion {
  std::string id;
  /// Closed rings grouped by polygon (outer first); first point repeated last.
  std::vector<std::vector<std::vector<Vec2>>> polygons;
  /// Pieces of rings cut by the interruption.
  std::vector<std::vector<Vec2>> open_lines;
};

struct MappedBorders {
  Mode mode = Mode::plane;
  std::string projection;
  std::vector<MappedRegion> regions;
};

/// Maps one traced line through the per-triangle affine maps; sphere results
/// are normalized and projected. Lines are cut where they cross the
/// interruption.
std::vector<std::vector<Vec2>> map_line(const TracedLine& line, const MapFrame& frame,
                                        bool* was_cut = nullptr);

MappedBorders map_borders(const std::vector<TracedRegion>& regions, const MapFrame& frame);

/// Edges of the deformed mesh in output coordinates; sphere edges crossing
/// the interruption are dropped.
std::vector<std::array<Vec2, 2>> map_mesh_edges(const MapFrame& frame);

/// Geographic graticule every `step_deg` degrees, rotated into the map
/// frame for the given interruption and traced through the mesh.
std::vector<TracedLine> trace_graticule(const Mesh& mesh, double interruption_lon_deg,
                                        double step_deg = 30.0);

/// FeatureCollection with a top-level "planar": true member. Regions whose
/// rings are all closed become MultiPolygons, others MultiLineStrings.
/// Throws NumericError on non-finite coordinates.
std::string emit_geojson(const MappedBorders& borders);

struct SvgOptions {
  double width = 1000.0;
  bool mesh = false;
  bool graticule = false;
};

/// SVG 1.1 document, one path per region plus optional mesh and graticule
/// layers. Output y points down, so map y is flipped.
std::string emit_svg(const MappedBorders& borders, const SvgOptions& options,
                     const std::vector<std::array<Vec2, 2>>& mesh_edges = {},
                     const std::vector<std::vector<Vec2>>& graticule = {});

/// Signed shoelace area of a closed planar ring.
double ring_area(std::span<const Vec2> ring);

struct RegionErrorRow {
  std::string id;
  double population = 0.0;
  double area = 0.0;
  double rel_error = 0.0;  // (mu - p) / p
};

struct ErrorReport {
  std::vector<RegionErrorRow> regions;
  double median_abs_rel_error = 0.0;
  double max_abs_rel_error = 0.0;
  std::vector<StageStats> stages;
};

ErrorReport error_report(const SolveResult& result, const RegionSet& regions);

/// region_id,population,area,rel_error
std::string report_csv(const ErrorReport& report);
/// stage,error_weight,distortion_weight,gamma,steps,converged,median_rel_error,max_rel_error
std::string stages_csv(const ErrorReport& report);
/// Stage rows with wall times, kept apart from the deterministic files.
std::string timings_csv(const std::vector<StageStats>& stages);

}  // namespace cartogram
