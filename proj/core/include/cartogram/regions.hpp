#pragma once

#include "cartogram/distortion.hpp"
#include "cartogram/mesh.hpp"
#include "cartogram/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace cartogram {

/// One polygon of a region: an anticlockwise outer ring and clockwise
/// holes, on the unit sphere in the map frame. Edges are minor great-circle
/// arcs; rings are stored open (last vertex != first). Each outer ring
/// encloses the smaller side of the sphere it cuts off.
struct SphericalPolygon {
  std::vector<Vec3> outer;
  std::vector<std::vector<Vec3>> holes;
};

struct Region {
  std::string id;
  double value = 0.0;  // r_R > 0
  std::vector<SphericalPolygon> polygons;
  double initial_area = 0.0;  // mu^_R, filled by prepare_regions
  double population = 0.0;  // p_R, filled by prepare_regions
};

struct RegionSet {
  std::vector<Region> regions;
  std::size_t size() const { return regions.size(); }
};

/// Reorients rings (outer anticlockwise, holes clockwise) and validates
/// every ring; throws GeometryError on self-intersection or degeneracy.
void normalize_polygon(SphericalPolygon& polygon);

/// Parses a GeoJSON FeatureCollection of Polygon/MultiPolygon features with
/// properties {"id": string, "value": number}. Coordinates are lon/lat
/// degrees on the unit sphere; the whole map is rotated about the polar axis
/// so that `interruption_lon_deg` lands on lon = 180 of the map frame.
/// Features sharing an id are merged into one region.
RegionSet read_regions_geojson(const std::string& text, double interruption_lon_deg = -169.0);

/// Rotation (radians, about +z) taking geographic coordinates into the map
/// frame for a given interruption meridian.
double map_frame_rotation(double interruption_lon_deg);

/// Sparse portion entry psi_{R,T}.
struct PortionEntry {
  std::uint32_t region = 0;
  double portion = 0.0;
};

/// Area fractions of every triangle covered by every region, measured in
/// the triangle's own (chord) plane after radially projecting the borders
/// onto it. Entries per triangle are sorted by region index.
struct PortionTable {
  std::vector<std::vector<PortionEntry>> by_triangle;
  std::vector<double> land;  // psi-bar_T
  std::size_t region_count = 0;

  std::size_t triangle_count() const { return by_triangle.size(); }
  double portion(std::size_t region, std::size_t triangle) const;
};

/// psi_{R,T} for every triangle. Throws GeometryError for malformed rings.
PortionTable compute_portions(const Mesh& mesh, const RegionSet& regions, int threads = 1);

/// Area fraction of a single ring (signed by orientation) inside the flat
/// triangle (a, b, c) after radial projection.
double ring_portion(std::span<const Vec3> ring, const Vec3& a, const Vec3& b, const Vec3& c);

/// p_R = r_R * sum(mu^) / sum(r). Throws InputError for non-positive values
/// or areas.
std::vector<double> scale_populations(std::span<const double> values,
                                      std::span<const double> initial_areas);

/// mu^_R = sum_T psi_{R,T} m^_T.
std::vector<double> initial_region_areas(const PortionTable& portions,
                                         std::span<const double> triangle_areas);

/// Intended scale per triangle. Triangles touching land take the
/// portion-weighted mean of p_R / mu^_R; all-water triangles are filled by a
/// Jacobi iteration in which each takes the area-weighted mean of its edge
/// neighbours (land held fixed) until the largest update is below 1e-10.
/// With no land at all every scale is 1.
std::vector<double> intended_scales(const PortionTable& portions,
                                    std::span<const double> populations,
                                    std::span<const double> initial_areas,
                                    std::span<const Triangle> triangles,
                                    std::span<const double> triangle_areas);

/// Initial frames for every triangle of the mesh.
std::vector<TriangleFrame> initial_frames(const Mesh& mesh);

/// Fills initial_area and population of every region from the portion
/// table and frame areas.
void prepare_regions(RegionSet& regions, const PortionTable& portions,
                     std::span<const TriangleFrame> frames);

std::string portions_to_json(const PortionTable& table, const std::string& mesh_hash,
                             const std::string& regions_hash);

struct CachedPortions {
  PortionTable table;
  std::string mesh_hash;
  std::string regions_hash;
};
CachedPortions portions_from_json(const std::string& text);

/// Rules for adaptive subdivision of the initial mesh.
struct SubdivisionRules {
  int min_triangles_per_region = 4;
  double max_scaled_area = 4.0 * kPi / 2048.0;  // bound on s_T m^_T
  bool split_borders_once = true;
  bool split_polar_cap_once = true;
  double polar_cap_lat = deg_to_rad(80.0);
  int max_depth = 8;
};

/// Marks triangles violating a rule. `first_pass` enables the one-time
/// border and polar-cap splits.
std::vector<bool> mark_for_subdivision(const Mesh& mesh, const PortionTable& portions,
                                       std::span<const double> scales,
                                       const SubdivisionRules& rules, bool first_pass);

/// One conforming refinement step driven by the rules.
Refinement subdivide(const Mesh& mesh, const PortionTable& portions,
                     std::span<const double> scales, const SubdivisionRules& rules,
                     bool first_pass = true);

/// Repeats mark / refine / recompute until no rule fires. Throws
/// NumericError if rules still fire after `max_depth` rounds.
Mesh subdivide_until_satisfied(const Mesh& mesh, const RegionSet& regions,
                               const SubdivisionRules& rules, int threads = 1);

}  // namespace cartogram
