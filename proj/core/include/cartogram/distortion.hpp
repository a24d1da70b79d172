#pragma once

#include "cartogram/geom.hpp"
#include "cartogram/types.hpp"

#include <array>
#include <stdexcept>

namespace cartogram {

/// Raised when a derivative routine is called outside its domain
/// (det K at or below tolerance).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Constant data of one initial triangle: the edge matrix G^ expressed in an
/// orthonormal basis of the triangle's own plane, its inverse, and the
/// initial (flat) area m^ = det(G^)/2.
struct TriangleFrame {
  Mat2 edges = Mat2::Identity();
  Mat2 edges_inv = Mat2::Identity();
  double area = 0.5;
};

/// Throws GeometryError for collinear vertices.
TriangleFrame initial_frame(const Vec3& a, const Vec3& b, const Vec3& c);

/// Edge matrix [b - a, c - a] of a planar triangle.
Mat2 edge_matrix(const Vec2& a, const Vec2& b, const Vec2& c);

/// K = G G^-1 for a planar transformed triangle.
Mat2 plane_K(const Vec2& a, const Vec2& b, const Vec2& c, const TriangleFrame& frame);

/// Transformed spherical triangle measured in the tangent plane at its
/// midpoint n = nzd(a + b + c), in the graticule basis at n.
struct SphereTriangle {
  Mat2 K;
  Vec3 midpoint;
  TangentBasis basis;
  double sum_norm = 0.0;  // |a + b + c|
  std::array<Vec3, 3> vertices;
};

/// Throws GeometryError when a + b + c vanishes.
SphereTriangle sphere_K(const Vec3& a, const Vec3& b, const Vec3& c, const TriangleFrame& frame);

/// |A|_F^2 / det A - 2, or +inf when det A <= 1e-12.
double shape_distortion(const Mat2& a);

/// det/s + s/det - 2, or +inf when det <= 1e-12. Throws ConfigError if s <= 0.
double scale_distortion(double det, double intended_scale);

/// d det(A) / dA (the cofactor matrix).
Mat2 det_gradient(const Mat2& a);

/// d shape_distortion(A) / dA; requires det A > 1e-12.
Mat2 shape_gradient(const Mat2& a);

/// d scale_distortion / d det; requires det > 1e-12.
double scale_derivative(double det, double intended_scale);

/// Pulls a gradient with respect to K back to the three planar vertices.
std::array<Vec2, 3> plane_vertex_gradient(const Mat2& d_k, const TriangleFrame& frame);

/// Pulls a gradient with respect to K back to the three sphere vertices
/// through the tangent-plane construction. The tangent plane and basis are
/// held fixed, which is exact for rotation-invariant functions of K.
std::array<Vec3, 3> sphere_vertex_gradient(const Mat2& d_k, const SphereTriangle& tri,
                                           const TriangleFrame& frame);

/// Gradient of a scalar with respect to the midpoint displacement (east u,
/// north v) pulled back to each vertex; identical for all three vertices.
Vec3 midpoint_vertex_gradient(double d_east, double d_north, const SphereTriangle& tri);

template <typename V>
struct DistortionDerivatives {
  std::array<V, 3> det;
  std::array<V, 3> shape;
  std::array<V, 3> scale;
};

/// Partials of det K, shape and scale distortion with respect to every
/// coordinate of the planar vertices. Throws ContractViolation when
/// det K <= 1e-12.
DistortionDerivatives<Vec2> plane_distortion_derivatives(const Vec2& a, const Vec2& b,
                                                         const Vec2& c, const TriangleFrame& frame,
                                                         double intended_scale);

/// Same for sphere vertices via the tangent-plane construction.
DistortionDerivatives<Vec3> sphere_distortion_derivatives(const Vec3& a, const Vec3& b,
                                                          const Vec3& c, const TriangleFrame& frame,
                                                          double intended_scale);

}  // namespace cartogram
