#include "cartogram/distortion.hpp"

#include <cmath>

namespace cartogram {

TriangleFrame initial_frame(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 normal = ab.cross(ac);
  if (normal.norm() <= kTolerance || ab.norm() <= kTolerance) {
    throw GeometryError("initial triangle is degenerate");
  }
  const Vec3 e1 = ab.normalized();
  const Vec3 e2 = normal.normalized().cross(e1);
  TriangleFrame f;
  f.edges << ab.dot(e1), ac.dot(e1), ab.dot(e2), ac.dot(e2);
  f.edges_inv = f.edges.inverse();
  f.area = 0.5 * f.edges.determinant();
  return f;
}

Mat2 edge_matrix(const Vec2& a, const Vec2& b, const Vec2& c) {
  Mat2 g;
  g.col(0) = b - a;
  g.col(1) = c - a;
  return g;
}

Mat2 plane_K(const Vec2& a, const Vec2& b, const Vec2& c, const TriangleFrame& frame) {
  return edge_matrix(a, b, c) * frame.edges_inv;
}

SphereTriangle sphere_K(const Vec3& a, const Vec3& b, const Vec3& c, const TriangleFrame& frame) {
  SphereTriangle t;
  const Vec3 sum = a + b + c;
  t.sum_norm = sum.norm();
  if (t.sum_norm <= kTolerance) throw GeometryError("triangle midpoint is undefined (a+b+c = 0)");
  t.midpoint = sum / t.sum_norm;
  t.basis = graticule_basis(t.midpoint);
  t.vertices = {a, b, c};
  const Vec3 atp = tangent_project(a, t.midpoint);
  const Vec3 ab = tangent_project(b, t.midpoint) - atp;
  const Vec3 ac = tangent_project(c, t.midpoint) - atp;
  Mat2 g;
  g << ab.dot(t.basis.east), ac.dot(t.basis.east), ab.dot(t.basis.north), ac.dot(t.basis.north);
  t.K = g * frame.edges_inv;
  return t;
}

double shape_distortion(const Mat2& a) {
  const double det = a.determinant();
  if (!(det > kTolerance)) return kInfinity;
  return a.squaredNorm() / det - 2.0;
}

double scale_distortion(double det, double intended_scale) {
  if (!(intended_scale > 0.0)) throw ConfigError("intended scale must be positive");
  if (!(det > kTolerance)) return kInfinity;
  return det / intended_scale + intended_scale / det - 2.0;
}

Mat2 det_gradient(const Mat2& a) {
  Mat2 g;
  g << a(1, 1), -a(1, 0), -a(0, 1), a(0, 0);
  return g;
}

Mat2 shape_gradient(const Mat2& a) {
  const double det = a.determinant();
  if (!(det > kTolerance)) throw ContractViolation("shape_gradient: det <= tolerance");
  return (2.0 / det) * a - (a.squaredNorm() / (det * det)) * det_gradient(a);
}

double scale_derivative(double det, double intended_scale) {
  if (!(det > kTolerance)) throw ContractViolation("scale_derivative: det <= tolerance");
  return 1.0 / intended_scale - intended_scale / (det * det);
}

std::array<Vec2, 3> plane_vertex_gradient(const Mat2& d_k, const TriangleFrame& frame) {
  // K = G M with M constant, so dF/dG = dF/dK M^T; G's columns are b-a, c-a.
  const Mat2 d_g = d_k * frame.edges_inv.transpose();
  const Vec2 gb = d_g.col(0);
  const Vec2 gc = d_g.col(1);
  return {Vec2(-gb - gc), gb, gc};
}

std::array<Vec3, 3> sphere_vertex_gradient(const Mat2& d_k, const SphereTriangle& tri,
                                           const TriangleFrame& frame) {
  const std::array<Vec2, 3> flat = plane_vertex_gradient(d_k, frame);
  const Vec3& n = tri.midpoint;
  std::array<Vec3, 3> out;
  Vec3 shared = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    out[i] = flat[i].x() * tri.basis.east + flat[i].y() * tri.basis.north;
    shared += (1.0 - tri.vertices[i].dot(n)) * out[i];
  }
  // x_tp = x + (1 - x.n) n and n = nzd(a+b+c); the tangent-plane gradient g
  // is orthogonal to n, leaving g.x' + (1 - x.n) g.n' with
  // n' = (I - n n^T)(a'+b'+c')/|a+b+c|.
  shared /= tri.sum_norm;
  for (auto& g : out) g += shared;
  return out;
}

Vec3 midpoint_vertex_gradient(double d_east, double d_north, const SphereTriangle& tri) {
  return (d_east * tri.basis.east + d_north * tri.basis.north) / tri.sum_norm;
}

DistortionDerivatives<Vec2> plane_distortion_derivatives(const Vec2& a, const Vec2& b,
                                                         const Vec2& c, const TriangleFrame& frame,
                                                         double intended_scale) {
  const Mat2 k = plane_K(a, b, c, frame);
  const double det = k.determinant();
  if (!(det > kTolerance)) throw ContractViolation("distortion derivatives need det K > tolerance");
  const Mat2 d_det = det_gradient(k);
  return {plane_vertex_gradient(d_det, frame), plane_vertex_gradient(shape_gradient(k), frame),
          plane_vertex_gradient(scale_derivative(det, intended_scale) * d_det, frame)};
}

DistortionDerivatives<Vec3> sphere_distortion_derivatives(const Vec3& a, const Vec3& b,
                                                          const Vec3& c, const TriangleFrame& frame,
                                                          double intended_scale) {
  const SphereTriangle tri = sphere_K(a, b, c, frame);
  const double det = tri.K.determinant();
  if (!(det > kTolerance)) throw ContractViolation("distortion derivatives need det K > tolerance");
  const Mat2 d_det = det_gradient(tri.K);
  return {sphere_vertex_gradient(d_det, tri, frame),
          sphere_vertex_gradient(shape_gradient(tri.K), tri, frame),
          sphere_vertex_gradient(scale_derivative(det, intended_scale) * d_det, tri, frame)};
}

}  // namespace cartogram
