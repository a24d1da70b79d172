#include "cartogram/geom.hpp"

#include <algorithm>
#include <cmath>

namespace cartogram {

Vec3 nzd(const Vec3& v) {
  const double norm = v.norm();
  if (!(norm > kTolerance)) {
    throw GeometryError("nzd: cannot normalize a zero-length vector");
  }
  return v / norm;
}

Vec3 lonlat_to_point(const LonLat& p) {
  const double cl = std::cos(p.lat);
  return {cl * std::cos(p.lon), cl * std::sin(p.lon), std::sin(p.lat)};
}

LonLat point_to_lonlat(const Vec3& p) {
  const double horizontal = std::hypot(p.x(), p.y());
  LonLat out;
  out.lat = std::atan2(p.z(), horizontal);
  out.lon = horizontal > 0.0 ? std::atan2(p.y(), p.x()) : 0.0;
  return out;
}

TangentBasis graticule_basis(const Vec3& p) {
  const double horizontal = std::hypot(p.x(), p.y());
  if (horizontal <= kTolerance) {
    if (p.z() > 0.0) {
      return {Vec3(0.0, 1.0, 0.0), Vec3(-1.0, 0.0, 0.0)};
    }
    return {Vec3(0.0, 1.0, 0.0), Vec3(1.0, 0.0, 0.0)};
  }
  const Vec3 east(-p.y() / horizontal, p.x() / horizontal, 0.0);
  // north = p x east, written out so that it stays exactly orthogonal to east.
  const double z = p.z();
  const Vec3 north(-z * east.y(), z * east.x(), horizontal);
  return {east, north};
}

Vec3 tangent_project(const Vec3& v, const Vec3& n) { return v + (1.0 - v.dot(n)) * n; }

double spherical_triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double triple = a.dot(b.cross(c));
  const double denom = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(triple, denom);
}

namespace {

Vec3 polygon_apex(std::span<const Vec3> ring) {
  Vec3 vector_area = Vec3::Zero();
  Vec3 sum = Vec3::Zero();
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Vec3& p = ring[i];
    const Vec3& q = ring[(i + 1) % ring.size()];
    vector_area += p.cross(q);
    sum += p;
  }
  if (vector_area.norm() > kTolerance) return vector_area.normalized();
  if (sum.norm() > kTolerance) return sum.normalized();
  return ring.front();
}

}  // namespace

double signed_polygon_area_unchecked(std::span<const Vec3> ring) {
  if (ring.size() < 3) return 0.0;
  const Vec3 apex = polygon_apex(ring);
  double area = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    area += spherical_triangle_area(apex, ring[i], ring[(i + 1) % ring.size()]);
  }
  return area;
}

bool arcs_intersect(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1) {
  const Vec3 na = a0.cross(a1);
  const Vec3 nb = b0.cross(b1);
  const Vec3 line = na.cross(nb);
  if (line.norm() <= kTolerance) return false;  // same great circle
  auto on_arc = [](const Vec3& p, const Vec3& q, const Vec3& normal, const Vec3& x) {
    return p.cross(x).dot(normal) > kTolerance && x.cross(q).dot(normal) > kTolerance;
  };
  for (const Vec3& x : {Vec3(line), Vec3(-line)}) {
    if (on_arc(a0, a1, na, x) && on_arc(b0, b1, nb, x)) return true;
  }
  return false;
}

double spherical_polygon_area(std::span<const Vec3> ring) {
  std::vector<Vec3> pts(ring.begin(), ring.end());
  if (pts.size() > 1 && (pts.front() - pts.back()).norm() <= kTolerance) pts.pop_back();
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec3& a, const Vec3& b) { return (a - b).norm() <= kTolerance; }),
            pts.end());
  if (pts.size() < 3) {
    throw GeometryError("spherical polygon needs at least three distinct vertices");
  }
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through the closing edge
      if (arcs_intersect(pts[i], pts[i + 1], pts[j], pts[(j + 1) % n])) {
        throw GeometryError("spherical polygon is self-intersecting");
      }
    }
  }
  const double area = signed_polygon_area_unchecked(pts);
  if (!(area > kTolerance)) {
    throw GeometryError("spherical polygon is degenerate or clockwise");
  }
  return area;
}

double angular_distance(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

Vec3 rotate_z(const Vec3& p, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * p.x() - s * p.y(), s * p.x() + c * p.y(), p.z()};
}

}  // namespace cartogram
