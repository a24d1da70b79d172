#include "cartogram/projections.hpp"

#include <cmath>

namespace cartogram {

namespace {

constexpr double kHalfPi = kPi / 2.0;

Mat2 make_mat(double a, double b, double c, double d) {
  Mat2 m;
  m << a, b, c, d;
  return m;
}

}  // namespace

Vec2 TargetProjection::forward(const LonLat& p) const {
  const ProjectionProfile prof = profile(p.lat);
  return {p.lon * prof.x_scale, prof.y};
}

Mat2 TargetProjection::jacobian(const LonLat& p) const {
  const double c = std::cos(p.lat);
  if (c <= kTolerance) throw GeometryError("projection Jacobian is undefined at the poles");
  const ProjectionProfile prof = profile(p.lat);
  return make_mat(prof.x_scale / c, p.lon * prof.dx_scale, 0.0, prof.dy);
}

Mat2 TargetProjection::jacobian_dlon(const LonLat& p) const {
  const ProjectionProfile prof = profile(p.lat);
  return make_mat(0.0, prof.dx_scale, 0.0, 0.0);
}

Mat2 TargetProjection::jacobian_dlat(const LonLat& p) const {
  const double c = std::cos(p.lat);
  const double s = std::sin(p.lat);
  if (c <= kTolerance) throw GeometryError("projection Jacobian is undefined at the poles");
  const ProjectionProfile prof = profile(p.lat);
  const double d_first = (prof.dx_scale * c + prof.x_scale * s) / (c * c);
  return make_mat(d_first, p.lon * prof.ddx_scale, 0.0, prof.ddy);
}

// --- Mollweide -------------------------------------------------------------

double Mollweide::auxiliary_angle(double lat) {
  const double target = kPi * std::sin(lat);
  if (std::abs(target) >= kPi) return std::copysign(kHalfPi, lat);
  // f(t) = 2t + sin 2t - pi sin(lat) is increasing on [-pi/2, pi/2]; Newton
  // steps that leave the bracket fall back to bisection.
  double lo = -kHalfPi;
  double hi = kHalfPi;
  double t = lat;
  for (int iter = 0; iter < 200; ++iter) {
    const double f = 2.0 * t + std::sin(2.0 * t) - target;
    if (f == 0.0) return t;
    if (f > 0.0) {
      hi = t;
    } else {
      lo = t;
    }
    const double df = 2.0 + 2.0 * std::cos(2.0 * t);
    double next = df > 0.0 ? t - f / df : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) < 1e-13) return next;
    t = next;
  }
  throw NumericError("Mollweide auxiliary angle did not converge");
}

ProjectionProfile Mollweide::profile(double lat) const {
  constexpr double k = 2.0 * 1.41421356237309504880 / kPi;
  constexpr double root2 = 1.41421356237309504880;
  const double t = auxiliary_angle(lat);
  const double ct = std::cos(t);
  const double st = std::sin(t);
  ProjectionProfile p;
  p.x_scale = k * ct;
  p.y = root2 * st;
  const double denom = 4.0 * ct * ct;
  if (denom <= 0.0) {
    const double inf = kInfinity;
    p.dx_scale = p.ddx_scale = p.dy = p.ddy = inf;
    return p;
  }
  const double dt = kPi * std::cos(lat) / denom;
  const double ddenom = -4.0 * std::sin(2.0 * t) * dt;
  const double ddt = (-kPi * std::sin(lat) * denom - kPi * std::cos(lat) * ddenom) / (denom * denom);
  p.dx_scale = -k * st * dt;
  p.ddx_scale = -k * (ct * dt * dt + st * ddt);
  p.dy = root2 * ct * dt;
  p.ddy = root2 * (-st * dt * dt + ct * ddt);
  return p;
}

// --- Equal Earth -----------------------------------------------------------

ProjectionProfile EqualEarth::profile(double lat) const {
  constexpr double a1 = 1.340264;
  constexpr double a2 = -0.081106;
  constexpr double a3 = 0.000893;
  constexpr double a4 = 0.003796;
  constexpr double m = 0.86602540378443864676;  // sqrt(3)/2

  const double t = std::asin(m * std::sin(lat));
  const double t2 = t * t;
  const double t6 = t2 * t2 * t2;
  const double poly = t * (a1 + a2 * t2 + t6 * (a3 + a4 * t2));
  const double d1 = a1 + 3.0 * a2 * t2 + t6 * (7.0 * a3 + 9.0 * a4 * t2);
  const double d2 = t * (6.0 * a2 + t2 * t2 * (42.0 * a3 + 72.0 * a4 * t2));
  const double d3 = 6.0 * a2 + t2 * t2 * (210.0 * a3 + 504.0 * a4 * t2);

  const double ct = std::cos(t);
  const double st = std::sin(t);
  const double dt = m * std::cos(lat) / ct;
  const double ddt = (-m * std::sin(lat) * ct + m * std::cos(lat) * st * dt) / (ct * ct);

  // X(t) = cos t / (m P'(t)).
  const double g = ct / (m * d1);
  const double num = -st * d1 - ct * d2;
  const double dg = num / (m * d1 * d1);
  const double dnum = -ct * d1 - ct * d3;
  const double ddg = (dnum * d1 - 2.0 * num * d2) / (m * d1 * d1 * d1);

  ProjectionProfile p;
  p.x_scale = g;
  p.dx_scale = dg * dt;
  p.ddx_scale = ddg * dt * dt + dg * ddt;
  p.y = poly;
  p.dy = d1 * dt;
  p.ddy = d2 * dt * dt + d1 * ddt;
  return p;
}

// --- Equirectangular -------------------------------------------------------

ProjectionProfile EquirectangularTest::profile(double lat) const {
  ProjectionProfile p;
  p.x_scale = 1.0;
  p.y = lat;
  p.dy = 1.0;
  return p;
}

std::unique_ptr<TargetProjection> make_projection(std::string_view name) {
  if (name == "mollweide") return std::make_unique<Mollweide>();
  if (name == "equal-earth") return std::make_unique<EqualEarth>();
  if (name == "equirectangular-test") return std::make_unique<EquirectangularTest>();
  throw ConfigError("projection: unknown projection name '" + std::string(name) + "'");
}

// --- Blurred Jacobian ------------------------------------------------------

double smoothstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

double smoothstep_derivative(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double u = t * (1.0 - t);
  return 30.0 * u * u;
}

BlurredJacobianField::BlurredJacobianField(std::shared_ptr<const TargetProjection> projection,
                                           double band_width, double pole_width)
    : projection_(std::move(projection)), band_width_(band_width), pole_width_(pole_width) {
  if (!projection_) throw ConfigError("blurred Jacobian needs a projection");
  if (!(band_width_ > 0.0) || !(pole_width_ > 0.0)) {
    throw ConfigError("blur widths must be positive");
  }
}

JacobianSample BlurredJacobianField::sample(const LonLat& p) const {
  const double abs_lat = std::abs(p.lat);
  const double tp = (abs_lat - (kHalfPi - pole_width_)) / pole_width_;
  const double pole_w = smoothstep(tp);
  if (pole_w >= 1.0) return {};
  const double dpole_w = smoothstep_derivative(tp) * (p.lat >= 0.0 ? 1.0 : -1.0) / pole_width_;

  const TargetProjection& proj = *projection_;
  const double c = std::cos(p.lat);
  const double s = std::sin(p.lat);
  const ProjectionProfile prof = proj.profile(p.lat);
  const double first = prof.x_scale / c;
  const double dfirst = (prof.dx_scale * c + prof.x_scale * s) / (c * c);

  const Mat2 jac = make_mat(first, p.lon * prof.dx_scale, 0.0, prof.dy);
  const Mat2 jac_dlon = make_mat(0.0, prof.dx_scale, 0.0, 0.0);
  const Mat2 jac_dlat = make_mat(dfirst, p.lon * prof.ddx_scale, 0.0, prof.ddy);

  JacobianSample out;
  const double gap = kPi - std::abs(p.lon);
  if (gap < band_width_) {
    // Signed offset from the cut, continuous across it.
    const double offset = p.lon > 0.0 ? p.lon - kPi : p.lon + kPi;
    const double tb = std::abs(offset) / band_width_;
    const double blend = 1.0 - smoothstep(tb);
    const double dblend = -smoothstep_derivative(tb) * (offset >= 0.0 ? 1.0 : -1.0) / band_width_;
    const Mat2 mean = make_mat(first, 0.0, 0.0, prof.dy);
    const Mat2 mean_dlat = make_mat(dfirst, 0.0, 0.0, prof.ddy);
    out.value = (1.0 - blend) * jac + blend * mean;
    out.dlon = dblend * (mean - jac) + (1.0 - blend) * jac_dlon;
    out.dlat = (1.0 - blend) * jac_dlat + blend * mean_dlat;
  } else {
    out.value = jac;
    out.dlon = jac_dlon;
    out.dlat = jac_dlat;
  }

  if (pole_w > 0.0) {
    const Mat2 id = Mat2::Identity();
    const Mat2 h = out.value;
    out.value = (1.0 - pole_w) * h + pole_w * id;
    out.dlon = (1.0 - pole_w) * out.dlon;
    out.dlat = dpole_w * (id - h) + (1.0 - pole_w) * out.dlat;
  }
  return out;
}

RotationCorrection rotation_corrected_derivatives(const JacobianSample& sample, double lat0) {
  const double c = std::cos(lat0);
  if (c <= kTolerance) throw GeometryError("rotation correction is undefined at the poles");
  const Mat2 quarter_turn = make_mat(0.0, 1.0, -1.0, 0.0);
  RotationCorrection out;
  out.d_east = sample.dlon / c + std::tan(lat0) * sample.value * quarter_turn;
  out.d_north = sample.dlat;
  return out;
}

RotationCorrection rotation_corrected_derivatives(const JacobianField& field, const Vec3& n0) {
  const LonLat ll = point_to_lonlat(n0);
  if (std::cos(ll.lat) <= kTolerance) {
    throw GeometryError("rotation correction is undefined at the poles");
  }
  return rotation_corrected_derivatives(field.sample(ll), ll.lat);
}

}  // namespace cartogram
