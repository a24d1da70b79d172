#pragma once

#include "cartogram/types.hpp"

#include <span>
#include <vector>

namespace cartogram {

/// Longitude/latitude in radians; lon in [-pi, pi], lat in [-pi/2, pi/2].
struct LonLat {
  double lon = 0.0;
  double lat = 0.0;
};

/// Orthonormal tangent basis at a point of the unit sphere. `east` and
/// `north` follow the graticule away from the poles; (east, north, point)
/// is right-handed.
struct TangentBasis {
  Vec3 east;
  Vec3 north;
};

/// v / |v|. Throws GeometryError when |v| <= 1e-12.
Vec3 nzd(const Vec3& v);

/// (cos lat cos lon, cos lat sin lon, sin lat).
Vec3 lonlat_to_point(const LonLat& p);

/// Inverse of lonlat_to_point; lon is 0 at the poles.
LonLat point_to_lonlat(const Vec3& p);

/// Graticule-aligned basis at p. At the north pole the basis is fixed to
/// east = (0,1,0), north = (-1,0,0); at the south pole east = (0,1,0),
/// north = (1,0,0).
TangentBasis graticule_basis(const Vec3& p);

/// Perpendicular projection of the unit vector v onto the plane tangent to
/// the sphere at n: v + (1 - v.n) n. The result satisfies w.n = 1.
Vec3 tangent_project(const Vec3& v, const Vec3& n);

/// Signed area of the spherical triangle (a, b, c), positive when the
/// vertices are anticlockwise seen from outside.
double spherical_triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

/// Area of a simple, anticlockwise spherical polygon whose edges are minor
/// great-circle arcs. Validates the ring and throws GeometryError for fewer
/// than three distinct vertices, self-intersections, or a non-positive area.
double spherical_polygon_area(std::span<const Vec3> ring);

/// Same as spherical_polygon_area but returns the signed area without
/// validation; used on rings already known to be well formed.
double signed_polygon_area_unchecked(std::span<const Vec3> ring);

/// True when the minor arcs (a0,a1) and (b0,b1) cross at an interior point.
bool arcs_intersect(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1);

/// Great-circle distance between unit vectors.
double angular_distance(const Vec3& a, const Vec3& b);

/// Rotation about the z axis by `angle` radians (anticlockwise seen from
/// the north pole).
Vec3 rotate_z(const Vec3& p, double angle);

}  // namespace cartogram
