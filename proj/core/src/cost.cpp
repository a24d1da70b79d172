#include "cartogram/cost.hpp"

#include "parallel.hpp"

#include <cmath>

namespace cartogram {

namespace {

bool on_sphere(Mode mode) { return mode != Mode::plane; }
bool uses_projection(Mode mode) { return mode == Mode::hybrid || mode == Mode::projection; }

// Per-triangle results of the parallel pass. Gradients are stored per local
// vertex with room for three coordinates.
struct TriangleResult {
  bool finite = true;
  double det = 0.0;
  double shape = 0.0;  // m^ w^shape delta^shape
  double scale = 0.0;  // m^ w^scale delta^scale
  std::array<Vec3, 3> d_distortion{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  std::array<Vec3, 3> d_det{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
};

Vec2 plane_at(const State& s, VertexIndex i) { return s.segment<2>(2 * i); }
Vec3 sphere_at(const State& s, VertexIndex i) { return s.segment<3>(3 * i); }

TriangleResult evaluate_triangle(const State& state, const CostParams& params,
                                 const CostTables& tables, std::size_t t, bool want_gradient) {
  TriangleResult r;
  const Triangle& tri = tables.triangles[t];
  const TriangleFrame& frame = tables.frames[t];
  const double w_shape = params.weights.shape[t];
  const double w_scale = params.weights.scale[t];
  const double s = tables.scales[t];

  Mat2 k;
  SphereTriangle st;
  if (on_sphere(params.mode)) {
    const Vec3 a = sphere_at(state, tri[0]);
    const Vec3 b = sphere_at(state, tri[1]);
    const Vec3 c = sphere_at(state, tri[2]);
    if ((a + b + c).norm() <= kTolerance) {
      r.finite = false;
      return r;
    }
    st = sphere_K(a, b, c, frame);
    k = st.K;
  } else {
    k = plane_K(plane_at(state, tri[0]), plane_at(state, tri[1]), plane_at(state, tri[2]), frame);
  }
  r.det = k.determinant();
  if (!(r.det > kTolerance)) {
    r.finite = false;
    return r;
  }

  // Shape distortion reads H(n) K in hybrid modes; areas and scale never do.
  Mat2 shape_k = k;
  JacobianSample h;
  double lat = 0.0;
  if (uses_projection(params.mode)) {
    lat = point_to_lonlat(st.midpoint).lat;
    h = params.jacobian->sample(st.midpoint);
    shape_k = h.value * k;
  }
  const double shape_value = shape_distortion(shape_k);
  if (!std::isfinite(shape_value)) {
    r.finite = false;
    return r;
  }
  r.shape = frame.area * w_shape * shape_value;
  r.scale = frame.area * w_scale * scale_distortion(r.det, s);
  if (!want_gradient) return r;

  const Mat2 cof = det_gradient(k);
  Mat2 d_k = frame.area * w_scale * scale_derivative(r.det, s) * cof;
  const Mat2 d_shape = frame.area * w_shape * shape_gradient(shape_k);
  Vec3 midpoint_term = Vec3::Zero();
  if (uses_projection(params.mode)) {
    d_k += h.value.transpose() * d_shape;
    if (std::cos(lat) > kTolerance) {
      const RotationCorrection rc = rotation_corrected_derivatives(h, lat);
      const double d_east = d_shape.cwiseProduct(rc.d_east * k).sum();
      const double d_north = d_shape.cwiseProduct(rc.d_north * k).sum();
      midpoint_term = midpoint_vertex_gradient(d_east, d_north, st);
    }
  } else {
    d_k += d_shape;
  }

  if (on_sphere(params.mode)) {
    const auto g = sphere_vertex_gradient(d_k, st, frame);
    const auto gd = sphere_vertex_gradient(frame.area * cof, st, frame);
    for (int i = 0; i < 3; ++i) {
      r.d_distortion[i] = g[i] + midpoint_term;
      r.d_det[i] = gd[i];
    }
  } else {
    const auto g = plane_vertex_gradient(d_k, frame);
    const auto gd = plane_vertex_gradient(frame.area * cof, frame);
    for (int i = 0; i < 3; ++i) {
      r.d_distortion[i].head<2>() = g[i];
      r.d_det[i].head<2>() = gd[i];
    }
  }
  return r;
}

CostBreakdown evaluate(const State& state, const CostParams& params, const CostTables& tables,
                       State* gradient, int threads, bool throw_if_infinite) {
  validate(state, params, tables);
  const std::size_t nt = tables.triangles.size();
  const int dim = vertex_dimension(params.mode);
  std::vector<TriangleResult> results(nt);
  detail::parallel_chunks(nt, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      results[t] = evaluate_triangle(state, params, tables, t, gradient != nullptr);
    }
  });

  CostBreakdown out;
  const std::size_t nr = tables.populations.size();
  out.region_areas.assign(nr, 0.0);
  bool finite = true;
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& r = results[t];
    if (!r.finite) {
      finite = false;
      continue;
    }
    out.shape += r.shape;
    out.scale += r.scale;
    for (const auto& e : tables.portions[t]) {
      out.region_areas[e.region] += e.portion * tables.frames[t].area * r.det;
    }
  }
  out.region_errors.resize(nr);
  for (std::size_t i = 0; i < nr; ++i) {
    out.region_errors[i] = out.region_areas[i] - tables.populations[i];
    out.error += params.weights.region[i] * out.region_errors[i] * out.region_errors[i];
  }

  if (gradient) gradient->setZero(state.size());
  const double w_dist = params.distortion_weight;

  if (params.mode == Mode::plane) {
    const auto& q = tables.quadrants;
    const double north_x = state[2 * q.north_pole];
    const double south_x = state[2 * q.south_pole];
    const std::array<std::pair<double, VertexIndex>, 4> anchors{
        std::pair{1.0, q.north_pole}, {-1.0, q.north_pole}, {-1.0, q.south_pole}, {1.0, q.south_pole}};
    for (int k = 0; k < 4; ++k) {
      const auto [sign, pole] = anchors[k];
      const double pole_x = pole == q.north_pole ? north_x : south_x;
      for (auto v : q.sets[k]) {
        const double gap = sign * (state[2 * v] - pole_x);
        if (!(gap > kTolerance)) {
          finite = false;
          continue;
        }
        out.boundary += params.boundary_weight / gap;
        if (gradient && finite) {
          const double d = w_dist * params.boundary_weight * sign / (gap * gap);
          (*gradient)[2 * v] -= d;
          (*gradient)[2 * pole] += d;
        }
      }
    }
  } else if (uses_projection(params.mode)) {
    if (tables.north_pole) {
      const VertexIndex p = *tables.north_pole;
      const double px = state[3 * p];
      const double py = state[3 * p + 1];
      out.pole = params.pole_weight * (px * px + py * py);
      if (gradient) {
        (*gradient)[3 * p] += w_dist * 2.0 * params.pole_weight * px;
        (*gradient)[3 * p + 1] += w_dist * 2.0 * params.pole_weight * py;
      }
    }
    for (std::size_t i = 0; i < tables.antimeridian.size(); ++i) {
      const VertexIndex v = tables.antimeridian[i];
      const double w = tables.antimeridian_weights[i];
      const double y = state[3 * v + 1];
      out.antimeridian += w * y * y;
      if (gradient) (*gradient)[3 * v + 1] += w_dist * 2.0 * w * y;
    }
  }

  if (!finite) {
    out.distortion = kInfinity;
    out.total = kInfinity;
    if (gradient && throw_if_infinite) {
      throw ContractViolation("cost_and_gradient called on an infinite-cost state");
    }
    return out;
  }
  out.distortion = out.shape + out.scale + out.boundary + out.pole + out.antimeridian;
  out.total = params.error_weight * out.error + w_dist * out.distortion;

  if (gradient) {
    for (std::size_t t = 0; t < nt; ++t) {
      double coef = 0.0;
      for (const auto& e : tables.portions[t]) {
        coef += 2.0 * params.weights.region[e.region] * out.region_errors[e.region] * e.portion;
      }
      coef *= params.error_weight;
      const auto& r = results[t];
      for (int i = 0; i < 3; ++i) {
        const Vec3 g = w_dist * r.d_distortion[i] + coef * r.d_det[i];
        gradient->segment(dim * tables.triangles[t][i], dim) += g.head(dim);
      }
    }
  }
  return out;
}

}  // namespace

std::string_view mode_name(Mode mode) {
  switch (mode) {
    case Mode::plane: return "plane";
    case Mode::sphere: return "sphere";
    case Mode::hybrid: return "hybrid";
    case Mode::projection: return "projection";
  }
  return "plane";
}

Mode parse_mode(std::string_view name) {
  for (Mode m : {Mode::plane, Mode::sphere, Mode::hybrid, Mode::projection}) {
    if (name == mode_name(m)) return m;
  }
  throw ConfigError("mode: unknown mode '" + std::string(name) + "'");
}

State pack_plane(std::span<const Vec2> positions) {
  State s(2 * positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) s.segment<2>(2 * i) = positions[i];
  return s;
}

State pack_sphere(std::span<const Vec3> positions) {
  State s(3 * positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) s.segment<3>(3 * i) = positions[i];
  return s;
}

std::vector<Vec2> unpack_plane(const State& state) {
  std::vector<Vec2> out(state.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = state.segment<2>(2 * i);
  return out;
}

std::vector<Vec3> unpack_sphere(const State& state) {
  std::vector<Vec3> out(state.size() / 3);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = state.segment<3>(3 * i);
  return out;
}

Weights make_weights(std::span<const double> land, std::span<const double> scales,
                     std::span<const double> populations, const WeightConfig& config) {
  if (land.size() != scales.size()) throw ConfigError("make_weights: land and scale sizes differ");
  Weights w;
  w.shape.resize(land.size());
  w.scale.resize(land.size());
  for (std::size_t t = 0; t < land.size(); ++t) {
    const double land_factor = land[t] > 0.0 ? 1.0 : config.water_factor;
    const double density = config.density_floor + (1.0 - config.density_floor) * scales[t];
    w.shape[t] = config.shape * land_factor * density;
    w.scale[t] = config.scale * land_factor * density;
  }
  w.region.reserve(populations.size());
  for (double p : populations) {
    if (!(p > 0.0)) throw InputError("populations must be positive");
    w.region.push_back(1.0 / p);
  }
  return w;
}

double AntimeridianProfile::weight(double lat) const {
  if (lat > north_lat) return north;
  if (lat < south_lat) return south;
  return middle;
}

std::vector<double> antimeridian_weights(const Mesh& mesh, const AntimeridianProfile& profile) {
  std::vector<double> out;
  out.reserve(mesh.antimeridian.size());
  for (auto v : mesh.antimeridian) out.push_back(profile.weight(point_to_lonlat(mesh.vertices[v]).lat));
  return out;
}

void validate(const State& state, const CostParams& params, const CostTables& tables) {
  const std::size_t nt = tables.triangles.size();
  const int dim = vertex_dimension(params.mode);
  if (state.size() % dim != 0) throw ConfigError("state size does not match the mode");
  const std::size_t nv = static_cast<std::size_t>(state.size() / dim);
  if (tables.frames.size() != nt || tables.portions.size() != nt || tables.scales.size() != nt ||
      params.weights.shape.size() != nt || params.weights.scale.size() != nt) {
    throw ConfigError("per-triangle tables disagree in size");
  }
  if (params.weights.region.size() != tables.populations.size()) {
    throw ConfigError("region weights and populations disagree in size");
  }
  if (params.error_weight < 0.0 || params.distortion_weight < 0.0 || params.boundary_weight < 0.0 ||
      params.pole_weight < 0.0) {
    throw ConfigError("cost weights must be non-negative");
  }
  if (params.mode != Mode::projection && !(params.error_weight > 0.0)) {
    throw ConfigError("error weight must be positive outside projection mode");
  }
  if (uses_projection(params.mode) && !params.jacobian) {
    throw ConfigError("hybrid and projection modes need a target projection");
  }
  if (tables.antimeridian.size() != tables.antimeridian_weights.size()) {
    throw ConfigError("antimeridian weights disagree in size");
  }
  for (const auto& t : tables.triangles) {
    for (auto v : t) {
      if (v >= nv) throw ConfigError("triangle references a missing vertex");
    }
  }
  if (params.mode == Mode::plane &&
      (tables.quadrants.north_pole >= nv || tables.quadrants.south_pole >= nv)) {
    throw ConfigError("plane layout pole index out of range");
  }
}

CostBreakdown evaluate_cost(const State& state, const CostParams& params,
                            const CostTables& tables, int threads) {
  return evaluate(state, params, tables, nullptr, threads, false);
}

CostBreakdown cost_and_gradient(const State& state, const CostParams& params,
                                const CostTables& tables, State& gradient, int threads) {
  return evaluate(state, params, tables, &gradient, threads, true);
}

CostBreakdown cost_and_gradient_if_finite(const State& state, const CostParams& params,
                                          const CostTables& tables, State& gradient,
                                          int threads) {
  State trial;
  CostBreakdown out = evaluate(state, params, tables, &trial, threads, false);
  if (out.finite()) gradient = std::move(trial);
  return out;
}

State project_gradient_to_sphere(const State& state, const State& gradient) {
  State out = gradient;
  for (Eigen::Index i = 0; i + 2 < state.size(); i += 3) {
    const Vec3 v = state.segment<3>(i);
    const Vec3 g = gradient.segment<3>(i);
    out.segment<3>(i) = g - g.dot(v) * v;
  }
  return out;
}

std::vector<double> triangle_determinants(const State& state, Mode mode,
                                          const CostTables& tables) {
  std::vector<double> out(tables.triangles.size(), 0.0);
  for (std::size_t t = 0; t < out.size(); ++t) {
    const Triangle& tri = tables.triangles[t];
    if (on_sphere(mode)) {
      const Vec3 a = sphere_at(state, tri[0]);
      const Vec3 b = sphere_at(state, tri[1]);
      const Vec3 c = sphere_at(state, tri[2]);
      if ((a + b + c).norm() <= kTolerance) continue;
      out[t] = sphere_K(a, b, c, tables.frames[t]).K.determinant();
    } else {
      out[t] = plane_K(plane_at(state, tri[0]), plane_at(state, tri[1]), plane_at(state, tri[2]),
                       tables.frames[t])
                   .determinant();
    }
  }
  return out;
}

}  // namespace cartogram
