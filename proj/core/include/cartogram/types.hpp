#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace cartogram {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

using VertexIndex = std::uint32_t;

// Determinants, denominators and norms at or below this are treated as zero.
inline constexpr double kTolerance = 1e-12;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Degenerate or malformed geometry (zero vectors, collinear triangles,
/// self-intersecting polygons).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Bad user input (non-positive data values, malformed files).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure (non-convergence, line-search failure, NaN).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace cartogram
