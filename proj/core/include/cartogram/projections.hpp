#pragma once

#include "cartogram/geom.hpp"
#include "cartogram/types.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace cartogram {

/// x = lon * X(lat), y = Y(lat) and the derivatives of X and Y with respect
/// to latitude, evaluated at one latitude.
struct ProjectionProfile {
  double x_scale = 0.0;  // X
  double dx_scale = 0.0;  // X'
  double ddx_scale = 0.0;  // X''
  double y = 0.0;  // Y
  double dy = 0.0;  // Y'
  double ddy = 0.0;  // Y''
};

/// Equal-area pseudocylindrical target projection of the unit sphere,
/// interrupted along lon = +-pi. Output coordinates are in sphere radii.
///
/// The Jacobian is expressed in the graticule basis (east, north) at the
/// input point, so its first column carries the 1/cos(lat) factor:
///
///   J = [ X/cos(lat)   lon X' ]
///       [ 0            Y'     ]
class TargetProjection {
 public:
  virtual ~TargetProjection() = default;

  virtual std::string_view name() const = 0;
  virtual ProjectionProfile profile(double lat) const = 0;
  virtual bool interrupts_antimeridian() const { return true; }

  Vec2 forward(const LonLat& p) const;

  /// Throws GeometryError within 1e-12 of a pole, where 1/cos(lat) blows up.
  Mat2 jacobian(const LonLat& p) const;

  /// d J / d lon and d J / d lat.
  Mat2 jacobian_dlon(const LonLat& p) const;
  Mat2 jacobian_dlat(const LonLat& p) const;
};

/// Mollweide; auxiliary angle from 2t + sin 2t = pi sin(lat) by Newton's
/// method starting at t = lat.
class Mollweide final : public TargetProjection {
 public:
  std::string_view name() const override { return "mollweide"; }
  ProjectionProfile profile(double lat) const override;

  /// Solves for the auxiliary angle; throws NumericError on non-convergence.
  static double auxiliary_angle(double lat);
};

/// Equal Earth (Savric, Patterson, Jenny 2018).
class EqualEarth final : public TargetProjection {
 public:
  std::string_view name() const override { return "equal-earth"; }
  ProjectionProfile profile(double lat) const override;
};

/// x = lon, y = lat. Not equal-area; used by tests.
class EquirectangularTest final : public TargetProjection {
 public:
  std::string_view name() const override { return "equirectangular-test"; }
  ProjectionProfile profile(double lat) const override;
};

/// "mollweide" | "equal-earth" | "equirectangular-test"; throws ConfigError
/// for anything else.
std::unique_ptr<TargetProjection> make_projection(std::string_view name);

/// H and its partials with respect to longitude and latitude at one point.
struct JacobianSample {
  Mat2 value = Mat2::Identity();
  Mat2 dlon = Mat2::Zero();
  Mat2 dlat = Mat2::Zero();
};

/// Smooth stand-in for the target projection's Jacobian, consumed only by
/// the shape-distortion term of hybrid and projection-only costs.
class JacobianField {
 public:
  virtual ~JacobianField() = default;
  virtual JacobianSample sample(const LonLat& p) const = 0;
  JacobianSample sample(const Vec3& p) const { return sample(point_to_lonlat(p)); }
};

/// H = identity everywhere.
class IdentityField final : public JacobianField {
 public:
  JacobianSample sample(const LonLat&) const override { return {}; }
};

/// Blurred Jacobian of a pseudocylindrical projection.
///
/// Within `band_width` of the interruption (measured in longitude) the
/// Jacobian is blended towards the mean of its two one-sided limits with a
/// quintic smoothstep weight, which makes H and its first derivatives agree
/// from both sides. Within `pole_width` of each pole the result is blended
/// to the identity with the same smoothstep, so H is the identity at the
/// poles themselves. Outside both bands H equals the projection Jacobian.
class BlurredJacobianField final : public JacobianField {
 public:
  explicit BlurredJacobianField(std::shared_ptr<const TargetProjection> projection,
                                double band_width = deg_to_rad(10.0),
                                double pole_width = deg_to_rad(5.0));

  JacobianSample sample(const LonLat& p) const override;
  using JacobianField::sample;

  const TargetProjection& projection() const { return *projection_; }
  double band_width() const { return band_width_; }
  double pole_width() const { return pole_width_; }

 private:
  std::shared_ptr<const TargetProjection> projection_;
  double band_width_;
  double pole_width_;
};

/// 6t^5 - 15t^4 + 10t^3 clamped to [0,1], and its derivative in t.
double smoothstep(double t);
double smoothstep_derivative(double t);

/// Derivatives of H(n) R(u, v) at n0 with respect to the east (u) and north
/// (v) displacements of n in the tangent plane at n0, where R is the
/// rotation the graticule basis undergoes as n moves:
///
///   d/du = (1/cos lat0) dH/dlon + tan(lat0) H [0 1; -1 0]
///   d/dv = dH/dlat
struct RotationCorrection {
  Mat2 d_east;
  Mat2 d_north;
};

/// Throws GeometryError when n0 is within 1e-12 of a pole.
RotationCorrection rotation_corrected_derivatives(const JacobianField& field, const Vec3& n0);

/// Same, from a sample already taken at latitude `lat0`.
RotationCorrection rotation_corrected_derivatives(const JacobianSample& sample, double lat0);

}  // namespace cartogram
