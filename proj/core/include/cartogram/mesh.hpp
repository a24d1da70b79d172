#pragma once

#include "cartogram/geom.hpp"
#include "cartogram/types.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cartogram {

class TargetProjection;

/// Vertex index triple, anticlockwise seen from outside the sphere (or
/// from +z in the plane).
using Triangle = std::array<VertexIndex, 3>;

/// Triangle mesh of the unit sphere. The map frame puts the interruption
/// meridian at lon = +-pi, i.e. on the half-plane y = 0, x < 0.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;

  std::optional<VertexIndex> north_pole;
  std::optional<VertexIndex> south_pole;
  /// Vertices lying exactly on the interruption meridian, poles excluded,
  /// sorted by index.
  std::vector<VertexIndex> antimeridian;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t triangle_count() const { return triangles.size(); }
};

/// Regular octahedron with poles at (0,0,+-1) and an equatorial vertex at
/// (-1,0,0), each face split into n^2 triangles on a barycentric grid and
/// pushed radially onto the sphere. 8n^2 triangles, 4n^2+2 vertices.
Mesh build_octahedral_mesh(int frequency);

/// Recomputes pole and antimeridian tags from vertex coordinates.
void tag_vertices(Mesh& mesh);

/// Spherical area of every triangle.
std::vector<double> spherical_triangle_areas(const Mesh& mesh);

/// Flat (chord-plane) area of every triangle.
std::vector<double> flat_triangle_areas(const Mesh& mesh);

/// For triangle t, neighbors[t][k] is the triangle sharing the edge
/// (v[k], v[k+1 mod 3]), or -1 on an open boundary.
std::vector<std::array<std::int64_t, 3>> triangle_adjacency(std::span<const Triangle> triangles);

/// Output of a conforming refinement.
struct Refinement {
  Mesh mesh;
  /// For each vertex appended after the parent's vertices, the edge it
  /// bisects (indices into the parent mesh).
  std::vector<std::array<VertexIndex, 2>> new_vertex_edges;
  /// Parent triangle of every output triangle.
  std::vector<std::size_t> parent_triangle;
};

/// Red-green refinement: marked triangles are split 1->4 at their edge
/// midpoints (pushed onto the sphere), triangles left with two or more split
/// edges are promoted to 1->4 splits, and triangles with exactly one split
/// edge are bisected so that no T-junctions remain.
Refinement refine(const Mesh& mesh, const std::vector<bool>& marked);

/// Boundary vertex sets of the planar layout. Q0 upper right, Q1 upper left,
/// Q2 lower left, Q3 lower right. Equator copies count as upper.
struct BoundaryQuadrants {
  std::array<std::vector<VertexIndex>, 4> sets;
  VertexIndex north_pole = 0;
  VertexIndex south_pole = 0;
};

/// Planar initial state for plane-mode cartograms.
struct PlaneLayout {
  /// Initial sphere position for every planar vertex (duplicates share it).
  std::vector<Vec3> initial;
  std::vector<Vec2> positions;
  std::vector<Triangle> triangles;
  BoundaryQuadrants quadrants;
  /// Mesh vertex each planar vertex came from.
  std::vector<VertexIndex> source_vertex;
  /// (east copy, west copy) for every duplicated antimeridian vertex.
  std::vector<std::array<VertexIndex, 2>> duplicated_pairs;
};

/// Cuts the mesh along the interruption meridian, duplicating the non-pole
/// vertices there, and projects every vertex with `projection`. Copies on
/// the east side (lon = +pi) keep the original index; west copies are
/// appended. Throws ConfigError if the projection does not interrupt the
/// antimeridian or the mesh has no pole vertices.
PlaneLayout project_initial_to_plane(const Mesh& mesh, const TargetProjection& projection);

/// JSON mesh file: {"vertices": [[x,y,z],...], "triangles": [[i,j,k],...],
/// "north_pole": i, "south_pole": i, "antimeridian": [...]}. Doubles are
/// written with round-trip precision.
std::string mesh_to_json(const Mesh& mesh);
Mesh mesh_from_json(const std::string& text);

}  // namespace cartogram
