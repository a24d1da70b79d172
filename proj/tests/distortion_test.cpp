#include "fixtures.hpp"

#include <cartogram/distortion.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace cartogram;
using namespace cartogram::testing;

namespace {

Mat2 rotation(double angle) {
  Mat2 r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return Vec3(g(rng), g(rng), g(rng)).normalized();
}

// Small, positively oriented spherical triangle near a random point.
std::array<Vec3, 3> random_sphere_triangle(std::mt19937_64& rng, double size) {
  const Vec3 c = random_unit(rng);
  const TangentBasis b = graticule_basis(c);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  std::array<Vec3, 3> out;
  for (int k = 0; k < 3; ++k) {
    const double a = 2 * kPi * k / 3 + jitter(rng);
    out[k] = nzd(c + size * (1 + jitter(rng)) * (std::cos(a) * b.east + std::sin(a) * b.north));
  }
  return out;
}

double flat_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

}  // namespace

TEST(Frame, RightTriangleIsIdentity) {
  const TriangleFrame f = initial_frame(Vec3(0, 0, 1), Vec3(1, 0, 1), Vec3(0, 1, 1));
  EXPECT_NEAR(f.area, 0.5, 1e-15);
  EXPECT_NEAR(std::abs(f.edges.determinant()), 1.0, 1e-15);
  const Eigen::JacobiSVD<Mat2> svd(f.edges);
  EXPECT_NEAR(svd.singularValues()[0], 1.0, 1e-15);
  EXPECT_NEAR(svd.singularValues()[1], 1.0, 1e-15);
}

TEST(Frame, AreaMatchesCrossProductAndIgnoresRotation) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 200; ++i) {
    const auto [a, b, c] = random_sphere_triangle(rng, 0.1);
    const TriangleFrame f = initial_frame(a, b, c);
    EXPECT_NEAR(f.area, flat_area(a, b, c), 1e-15);
    EXPECT_NEAR(f.edges.determinant(), 2.0 * f.area, 1e-14);
    EXPECT_LT((f.edges * f.edges_inv - Mat2::Identity()).norm(), 1e-12);

    const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.7, random_unit(rng)).toRotationMatrix();
    const TriangleFrame g = initial_frame(rot * a, rot * b, rot * c);
    EXPECT_NEAR(g.edges.determinant(), f.edges.determinant(), 1e-14);
    const Eigen::JacobiSVD<Mat2> sf(f.edges), sg(g.edges);
    EXPECT_LT((sf.singularValues() - sg.singularValues()).norm(), 1e-14);
  }
  EXPECT_THROW(initial_frame(Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(3, 0, 0)), GeometryError);
}

TEST(PlaneK, Examples) {
  const Vec2 a(0.1, 0.2), b(1.3, 0.4), c(0.5, 1.1);
  const TriangleFrame f = initial_frame(Vec3(a.x(), a.y(), 0), Vec3(b.x(), b.y(), 0),
                                        Vec3(c.x(), c.y(), 0));
  const Mat2 identity = plane_K(a, b, c, f);
  EXPECT_NEAR(identity.determinant(), 1.0, 1e-14);
  EXPECT_NEAR(shape_distortion(identity), 0.0, 1e-12);

  const Vec2 p(3.0, -2.0);
  const Mat2 scaled = plane_K(p + 2 * (a - p), p + 2 * (b - p), p + 2 * (c - p), f);
  EXPECT_NEAR(scaled.determinant(), 4.0, 1e-13);

  const Mat2 reflected = plane_K(Vec2(-a.x(), a.y()), Vec2(-b.x(), b.y()), Vec2(-c.x(), c.y()), f);
  EXPECT_LT(reflected.determinant(), 0.0);
}

TEST(PlaneK, DeterminantTimesAreaIsSignedArea) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 200; ++i) {
    const auto [x, y, z] = random_sphere_triangle(rng, 0.2);
    const TriangleFrame f = initial_frame(x, y, z);
    const Vec2 a(u(rng), u(rng)), b(u(rng), u(rng)), c(u(rng), u(rng));
    const Vec2 e1 = b - a, e2 = c - a;
    const double signed_area = 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
    EXPECT_NEAR(plane_K(a, b, c, f).determinant() * f.area, signed_area, 1e-12);
  }
}

TEST(EdgeMatrix, DerivativeWithRespectToFirstVertex) {
  const Vec2 a(0.3, 0.1), b(1.0, 0.2), c(0.2, 0.9);
  const double h = 1e-6;
  const Mat2 d = (edge_matrix(a + Vec2(h, 0), b, c) - edge_matrix(a - Vec2(h, 0), b, c)) / (2 * h);
  Mat2 expected;
  expected << -1, -1, 0, 0;
  EXPECT_LT((d - expected).norm(), 1e-9);
}

TEST(SphereK, Examples) {
  const Vec3 a(1, 0, 0), b(0, 1, 0), c(0, 0, 1);
  const TriangleFrame f = initial_frame(a, b, c);
  const SphereTriangle st = sphere_K(a, b, c, f);
  EXPECT_LT((st.midpoint - Vec3(1, 1, 1) / std::sqrt(3.0)).norm(), 1e-15);
  EXPECT_NEAR(st.K.determinant(), 1.0, 1e-14);

  const SphereTriangle swapped = sphere_K(a, c, b, f);
  EXPECT_NEAR(swapped.K.determinant(), -st.K.determinant(), 1e-14);
  EXPECT_THROW(sphere_K(Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 0, 0), f), GeometryError);
}

TEST(SphereK, IdentityTransformMatchesProjectedArea) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 200; ++i) {
    const auto [a, b, c] = random_sphere_triangle(rng, 0.1);
    const TriangleFrame f = initial_frame(a, b, c);
    const SphereTriangle st = sphere_K(a, b, c, f);
    const Vec3 n = st.midpoint;
    const double projected =
        flat_area(tangent_project(a, n), tangent_project(b, n), tangent_project(c, n));
    EXPECT_NEAR(st.K.determinant(), projected / f.area, 1e-12);
    // Orthogonal to first order in the triangle size.
    EXPECT_LT((st.K.transpose() * st.K - Mat2::Identity()).norm(), 0.05);
  }
}

TEST(ShapeDistortion, Examples) {
  EXPECT_NEAR(shape_distortion(Mat2::Identity()), 0.0, 1e-15);
  for (double angle : {0.3, 1.0, 2.5, -1.2}) {
    for (double k : {0.1, 1.0, 7.0}) {
      EXPECT_NEAR(shape_distortion(k * rotation(angle)), 0.0, 1e-12);
    }
  }
  EXPECT_NEAR(shape_distortion(Eigen::Vector2d(2, 1).asDiagonal()), 0.5, 1e-15);
  EXPECT_EQ(shape_distortion(Mat2::Zero()), kInfinity);
  EXPECT_EQ(shape_distortion(Eigen::Vector2d(1, 1e-13).asDiagonal()), kInfinity);
  EXPECT_EQ(shape_distortion(Eigen::Vector2d(1, -1).asDiagonal()), kInfinity);
}

TEST(ShapeDistortion, RotationInvariant) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 1000; ++i) {
    Mat2 a;
    a << u(rng), u(rng), u(rng), u(rng);
    if (a.determinant() <= 0.05) continue;
    const double base = shape_distortion(a);
    EXPECT_GE(base, 0.0);
    const double rotated = shape_distortion(rotation(3 * u(rng)) * a * rotation(3 * u(rng)));
    EXPECT_NEAR(rotated, base, 1e-9 * std::max(1.0, base));
  }
}

TEST(ShapeDistortion, ConvexInSecondSingularValue) {
  const double h = 1e-3;
  for (double s1 = 0.2; s1 <= 5.0; s1 += 0.3) {
    for (double s2 = 0.05; s2 <= 5.0; s2 += 0.07) {
      auto f = [&](double x) { return shape_distortion(Eigen::Vector2d(s1, x).asDiagonal()); };
      EXPECT_GT(f(s2 + h) - 2 * f(s2) + f(s2 - h), 0.0) << s1 << " " << s2;
    }
  }
}

TEST(ScaleDistortion, Examples) {
  EXPECT_NEAR(scale_distortion(1.7, 1.7), 0.0, 1e-15);
  EXPECT_NEAR(scale_distortion(2.0 * 0.3, 0.3), 0.5, 1e-15);
  EXPECT_EQ(scale_distortion(-1.0, 1.0), kInfinity);
  EXPECT_EQ(scale_distortion(0.0, 1.0), kInfinity);
  EXPECT_THROW(scale_distortion(1.0, 0.0), ConfigError);
}

TEST(Derivatives, MatrixGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    Mat2 a;
    a << 1 + 0.5 * u(rng), 0.5 * u(rng), 0.5 * u(rng), 1 + 0.5 * u(rng);
    Eigen::VectorXd x(4);
    x << a(0, 0), a(1, 0), a(0, 1), a(1, 1);
    auto as_mat = [](const Eigen::VectorXd& v) {
      Mat2 m;
      m << v[0], v[2], v[1], v[3];
      return m;
    };
    const Eigen::VectorXd fd_shape =
        central_difference([&](const Eigen::VectorXd& v) { return shape_distortion(as_mat(v)); }, x,
                           1e-6);
    const Eigen::VectorXd fd_det = central_difference(
        [&](const Eigen::VectorXd& v) { return as_mat(v).determinant(); }, x, 1e-6);
    const Mat2 gs = shape_gradient(a);
    const Mat2 gd = det_gradient(a);
    Eigen::VectorXd an_shape(4), an_det(4);
    an_shape << gs(0, 0), gs(1, 0), gs(0, 1), gs(1, 1);
    an_det << gd(0, 0), gd(1, 0), gd(0, 1), gd(1, 1);
    EXPECT_EQ(compare_gradients(an_shape, fd_shape, 1e-5, 1e-9).failures, 0u);
    EXPECT_EQ(compare_gradients(an_det, fd_det, 1e-5, 1e-9).failures, 0u);
    const double det = a.determinant();
    const double fd_scale =
        (scale_distortion(det + 1e-6, 0.7) - scale_distortion(det - 1e-6, 0.7)) / 2e-6;
    EXPECT_NEAR(scale_derivative(det, 0.7), fd_scale, 1e-5 * std::abs(fd_scale) + 1e-9);
  }
  EXPECT_THROW(shape_gradient(Mat2::Zero()), ContractViolation);
}

TEST(Derivatives, PlaneVertexPartials) {
  std::mt19937_64 rng(26);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (int i = 0; i < 100; ++i) {
    const auto [x, y, z] = random_sphere_triangle(rng, 0.3);
    const TriangleFrame f = initial_frame(x, y, z);
    Eigen::VectorXd v(6);
    v << u(rng), u(rng), 1 + u(rng), u(rng), 0.5 + u(rng), 1 + u(rng);
    auto tri = [](const Eigen::VectorXd& p) {
      return std::array<Vec2, 3>{Vec2(p[0], p[1]), Vec2(p[2], p[3]), Vec2(p[4], p[5])};
    };
    const auto t = tri(v);
    const auto d = plane_distortion_derivatives(t[0], t[1], t[2], f, 1.3);
    Eigen::VectorXd an_det(6), an_shape(6), an_scale(6);
    for (int k = 0; k < 3; ++k) {
      an_det.segment<2>(2 * k) = d.det[k];
      an_shape.segment<2>(2 * k) = d.shape[k];
      an_scale.segment<2>(2 * k) = d.scale[k];
    }
    auto K = [&](const Eigen::VectorXd& p) {
      const auto q = tri(p);
      return plane_K(q[0], q[1], q[2], f);
    };
    const auto fd_det = central_difference([&](auto& p) { return K(p).determinant(); }, v, 1e-6);
    const auto fd_shape =
        central_difference([&](auto& p) { return shape_distortion(K(p)); }, v, 1e-6);
    const auto fd_scale = central_difference(
        [&](auto& p) { return scale_distortion(K(p).determinant(), 1.3); }, v, 1e-6);
    EXPECT_EQ(compare_gradients(an_det, fd_det, 1e-5, 1e-9).failures, 0u);
    EXPECT_EQ(compare_gradients(an_shape, fd_shape, 1e-5, 1e-9).failures, 0u);
    EXPECT_EQ(compare_gradients(an_scale, fd_scale, 1e-5, 1e-9).failures, 0u);

    // Translation invariance.
    const Vec2 sum_det = d.det[0] + d.det[1] + d.det[2];
    EXPECT_LT(sum_det.norm(), 1e-10);
  }
}

TEST(Derivatives, SphereVertexPartials) {
  std::mt19937_64 rng(27);
  for (int i = 0; i < 100; ++i) {
    const auto initial = random_sphere_triangle(rng, 0.1);
    const TriangleFrame f = initial_frame(initial[0], initial[1], initial[2]);
    auto moved = random_sphere_triangle(rng, 0.1);
    Eigen::VectorXd v(9);
    for (int k = 0; k < 3; ++k) v.segment<3>(3 * k) = moved[k];
    auto K = [&](const Eigen::VectorXd& p) {
      return sphere_K(p.segment<3>(0), p.segment<3>(3), p.segment<3>(6), f).K;
    };
    const auto d = sphere_distortion_derivatives(moved[0], moved[1], moved[2], f, 0.8);
    Eigen::VectorXd an_det(9), an_shape(9), an_scale(9);
    for (int k = 0; k < 3; ++k) {
      an_det.segment<3>(3 * k) = d.det[k];
      an_shape.segment<3>(3 * k) = d.shape[k];
      an_scale.segment<3>(3 * k) = d.scale[k];
    }
    const auto fd_det = central_difference([&](auto& p) { return K(p).determinant(); }, v, 1e-6);
    const auto fd_shape =
        central_difference([&](auto& p) { return shape_distortion(K(p)); }, v, 1e-6);
    const auto fd_scale = central_difference(
        [&](auto& p) { return scale_distortion(K(p).determinant(), 0.8); }, v, 1e-6);
    EXPECT_EQ(compare_gradients(an_det, fd_det, 1e-5, 1e-9).failures, 0u);
    EXPECT_EQ(compare_gradients(an_shape, fd_shape, 1e-5, 1e-9).failures, 0u);
    EXPECT_EQ(compare_gradients(an_scale, fd_scale, 1e-5, 1e-9).failures, 0u);
  }
}

TEST(Derivatives, DegenerateTriangleViolatesContract) {
  const TriangleFrame f = initial_frame(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0));
  EXPECT_THROW(plane_distortion_derivatives(Vec2(0, 0), Vec2(1, 0), Vec2(2, 0), f, 1.0),
               ContractViolation);
}

TEST(Distortion, PinchPathGrowsToInfinity) {
  // Collapse one vertex of a sphere triangle onto the opposite edge.
  const Vec3 a = nzd(Vec3(1, -0.05, 0)), b = nzd(Vec3(1, 0.05, 0)), c = nzd(Vec3(1, 0, 0.08));
  const TriangleFrame f = initial_frame(a, b, c);
  double previous = 0.0;
  bool tripped = false;
  for (int i = 0; i <= 400; ++i) {
    const double t = std::pow(10.0, -i / 20.0);
    const Mat2 K = sphere_K(a, b, nzd(Vec3(1, 0, 0.08 * t)), f).K;
    const double value = shape_distortion(K) + scale_distortion(K.determinant(), 1.0);
    if (value == kInfinity) {
      tripped = true;
      break;
    }
    EXPECT_GE(value, previous);
    previous = value;
  }
  EXPECT_TRUE(tripped);
  EXPECT_GT(previous, 1e3);
}
