#include "cartogram/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

namespace cartogram {

namespace {

std::vector<char> fixed_mask(std::size_t vertex_count, const std::vector<VertexIndex>& fixed) {
  std::vector<char> mask(vertex_count, 0);
  for (auto v : fixed) {
    if (v >= vertex_count) throw ConfigError("fixed vertex index out of range");
    mask[v] = 1;
  }
  return mask;
}

State modified_gradient(const State& x, const State& gradient, Mode mode,
                        const std::vector<char>& fixed) {
  State g = mode == Mode::plane ? gradient : project_gradient_to_sphere(x, gradient);
  const int dim = vertex_dimension(mode);
  for (std::size_t v = 0; v < fixed.size(); ++v) {
    if (fixed[v]) g.segment(dim * v, dim).setZero();
  }
  return g;
}

double inf_norm(const State& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

CostParams with_stage(const CostParams& params, const Stage& stage) {
  CostParams p = params;
  p.error_weight = stage.error_weight;
  p.distortion_weight = stage.distortion_weight;
  return p;
}

}  // namespace

StageSchedule StageSchedule::cartogram(int count) {
  if (count < 1) throw ConfigError("stages: need at least one stage");
  StageSchedule s;
  for (int k = 1; k <= count; ++k) {
    s.stages.push_back({1.0, std::pow(10.0, -k), std::pow(10.0, -(1 + k))});
  }
  return s;
}

State lbfgs_direction(const SolverState& state, const SolverOptions& options) {
  const State& g = state.gradient;
  if (!g.allFinite()) throw NumericError("gradient is not finite");
  std::vector<const std::pair<State, State>*> pairs;
  for (const auto& p : state.history) {
    if (p.second.dot(p.first) > 0.0) pairs.push_back(&p);
  }
  if (pairs.empty()) {
    const double norm = inf_norm(g);
    if (norm == 0.0) return State::Zero(g.size());
    return -g * std::min(1.0, options.first_step / norm);
  }
  const std::size_t m = pairs.size();
  std::vector<double> alpha(m);
  std::vector<double> rho(m);
  State q = g;
  for (std::size_t i = m; i-- > 0;) {
    const auto& [s, y] = *pairs[i];
    rho[i] = 1.0 / y.dot(s);
    alpha[i] = rho[i] * s.dot(q);
    q -= alpha[i] * y;
  }
  const auto& [s_new, y_new] = *pairs.back();
  State r = (s_new.dot(y_new) / y_new.dot(y_new)) * q;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& [s, y] = *pairs[i];
    const double beta = rho[i] * y.dot(r);
    r += (alpha[i] - beta) * s;
  }
  return -r;
}

State apply_step(const State& x, const State& step, Mode mode, const std::vector<char>& fixed) {
  State out = x;
  const int dim = vertex_dimension(mode);
  const std::size_t nv = static_cast<std::size_t>(x.size() / dim);
  for (std::size_t v = 0; v < nv; ++v) {
    if (v < fixed.size() && fixed[v]) continue;
    if (mode == Mode::plane) {
      out.segment<2>(2 * v) += step.segment<2>(2 * v);
    } else {
      const Vec3 moved = x.segment<3>(3 * v) + step.segment<3>(3 * v);
      const double norm = moved.norm();
      // A vertex pushed through the origin makes the trial infeasible; the
      // caller sees the resulting NaN as an infinite cost.
      out.segment<3>(3 * v) = norm > kTolerance ? Vec3(moved / norm)
                                                : Vec3::Constant(std::nan(""));
    }
  }
  return out;
}

bool armijo_accepts(double before, double after, double slope, double c) {
  return after - before <= c * slope;
}

LineSearchResult line_search(const SolverState& state, const State& direction,
                             const CostParams& params, const CostTables& tables,
                             const SolverOptions& options) {
  const int dim = vertex_dimension(params.mode);
  const auto fixed = fixed_mask(static_cast<std::size_t>(state.x.size() / dim),
                                options.fixed_vertices);
  const double slope = direction.dot(state.gradient);
  LineSearchResult out;
  if (!(slope < 0.0)) return out;
  double t = 1.0;
  for (int halvings = 0; halvings <= options.max_halvings; ++halvings, t *= 0.5) {
    State trial = apply_step(state.x, t * direction, params.mode, fixed);
    if (!trial.allFinite()) continue;
    State gradient;
    const CostBreakdown cost =
        cost_and_gradient_if_finite(trial, params, tables, gradient, options.threads);
    if (!cost.finite()) continue;
    if (armijo_accepts(state.cost.total, cost.total, t * slope, options.armijo)) {
      out.accepted = true;
      out.x = std::move(trial);
      out.gradient = modified_gradient(out.x, gradient, params.mode, fixed);
      out.cost = cost;
      out.scale = t;
      out.halvings = halvings;
      return out;
    }
  }
  return out;
}

SolverState start_solver(const State& x, const CostParams& params, const CostTables& tables,
                         const SolverOptions& options) {
  SolverState s;
  s.x = x;
  State gradient;
  s.cost = cost_and_gradient_if_finite(x, params, tables, gradient, options.threads);
  if (!s.cost.finite()) throw NumericError("initial state has infinite cost");
  const int dim = vertex_dimension(params.mode);
  s.gradient = modified_gradient(
      x, gradient, params.mode,
      fixed_mask(static_cast<std::size_t>(x.size() / dim), options.fixed_vertices));
  return s;
}

std::vector<double> relative_errors(std::span<const double> areas,
                                    std::span<const double> populations) {
  std::vector<double> out(areas.size());
  for (std::size_t i = 0; i < areas.size(); ++i) {
    out[i] = std::abs(areas[i] - populations[i]) / populations[i];
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

StageStats run_stage(SolverState& state, const CostParams& base, const CostTables& tables,
                     const Stage& stage, int index, const SolverOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const CostParams params = with_stage(base, stage);
  SolverState fresh = start_solver(state.x, params, tables, options);
  state.gradient = std::move(fresh.gradient);
  state.cost = std::move(fresh.cost);
  state.history.clear();

  long steps = 0;
  bool converged = false;
  while (true) {
    if (inf_norm(state.gradient) < stage.gamma) {
      converged = true;
      break;
    }
    if (steps >= stage.max_steps) break;

    State direction = lbfgs_direction(state, options);
    if (!(direction.dot(state.gradient) < 0.0)) {
      state.history.clear();
      direction = lbfgs_direction(state, options);
    }
    LineSearchResult ls = line_search(state, direction, params, tables, options);
    if (!ls.accepted && !state.history.empty()) {
      state.history.clear();
      direction = lbfgs_direction(state, options);
      ls = line_search(state, direction, params, tables, options);
    }
    if (!ls.accepted) {
      throw NumericError("line search failed in stage " + std::to_string(index) + " after " +
                         std::to_string(steps) + " steps (gradient norm " +
                         std::to_string(inf_norm(state.gradient)) + ")");
    }

    const double slope = ls.scale * direction.dot(state.gradient);
    State s = ls.x - state.x;
    State y = ls.gradient - state.gradient;
    if (y.dot(s) > 0.0) {
      state.history.emplace_back(std::move(s), std::move(y));
      while (state.history.size() > static_cast<std::size_t>(std::max(options.memory, 1))) {
        state.history.pop_front();
      }
    }
    const double before = state.cost.total;
    state.x = std::move(ls.x);
    state.gradient = std::move(ls.gradient);
    state.cost = std::move(ls.cost);
    ++steps;
    ++state.steps;

    if (options.observer || options.progress) {
      StepRecord rec;
      rec.stage = index;
      rec.step = steps;
      rec.cost_before = before;
      rec.cost_after = state.cost.total;
      rec.slope = slope;
      rec.step_scale = ls.scale;
      rec.halvings = ls.halvings;
      rec.error = state.cost.error;
      rec.distortion = state.cost.distortion;
      rec.gradient_norm = inf_norm(state.gradient);
      if (options.track_min_det) {
        const auto dets = triangle_determinants(state.x, params.mode, tables);
        rec.min_det = dets.empty() ? 0.0 : *std::min_element(dets.begin(), dets.end());
      }
      if (options.observer) options.observer(rec);
      if (options.progress) {
        *options.progress << "stage " << index << " step " << steps << " C=" << rec.cost_after
                           << " E=" << rec.error << " D=" << rec.distortion
                           << " |G|=" << rec.gradient_norm << '\n';
      }
    }
  }

  StageStats st;
  st.index = index;
  st.error_weight = stage.error_weight;
  st.distortion_weight = stage.distortion_weight;
  st.gamma = stage.gamma;
  st.steps = steps;
  st.converged = converged;
  st.cost = state.cost.total;
  st.error = state.cost.error;
  st.distortion = state.cost.distortion;
  st.gradient_norm = inf_norm(state.gradient);
  const auto rel = relative_errors(state.cost.region_areas, tables.populations);
  st.median_rel_error = median(rel);
  st.max_rel_error = rel.empty() ? 0.0 : *std::max_element(rel.begin(), rel.end());
  st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return st;
}

SolveResult run_cartogram(const State& initial, const CostParams& params,
                          const CostTables& tables, const StageSchedule& schedule,
                          const SolverOptions& options) {
  if (params.mode == Mode::projection) {
    throw ConfigError("mode: projection runs use run_projection");
  }
  if (tables.populations.empty()) throw ConfigError("cartogram runs need at least one region");
  if (schedule.stages.empty()) throw ConfigError("stages: schedule is empty");
  SolverState state;
  state.x = initial;
  SolveResult result;
  result.mode = params.mode;
  for (std::size_t k = 0; k < schedule.stages.size(); ++k) {
    result.stages.push_back(
        run_stage(state, params, tables, schedule.stages[k], static_cast<int>(k + 1), options));
  }
  result.state = state.x;
  result.region_areas = state.cost.region_areas;
  result.populations = tables.populations;
  return result;
}

CartogramProblem cartogram_problem(const Mesh& mesh, RegionSet& regions,
                                   const PortionTable& portions, Mode mode,
                                   std::shared_ptr<const TargetProjection> projection,
                                   const CartogramOptions& options) {
  if (mode == Mode::projection) throw ConfigError("mode: projection runs use run_projection");
  if (mode != Mode::sphere && !projection) {
    throw ConfigError("projection: a target projection is required");
  }
  CartogramProblem p;
  CostTables& t = p.tables;
  t.frames = initial_frames(mesh);
  prepare_regions(regions, portions, t.frames);
  std::vector<double> areas, frame_areas;
  for (const auto& r : regions.regions) {
    t.populations.push_back(r.population);
    areas.push_back(r.initial_area);
  }
  for (const auto& f : t.frames) frame_areas.push_back(f.area);
  t.portions = portions.by_triangle;
  t.scales = intended_scales(portions, t.populations, areas, mesh.triangles, frame_areas);
  t.north_pole = mesh.north_pole;
  t.antimeridian = mesh.antimeridian;
  t.antimeridian_weights = antimeridian_weights(mesh, options.antimeridian);

  p.params.mode = mode;
  p.params.weights = make_weights(portions.land, t.scales, t.populations, options.weights);
  p.params.boundary_weight = options.boundary_weight;
  p.params.pole_weight = options.pole_weight;
  if (mode == Mode::plane) {
    const PlaneLayout layout = project_initial_to_plane(mesh, *projection);
    t.triangles = layout.triangles;
    t.quadrants = layout.quadrants;
    p.initial = pack_plane(layout.positions);
  } else {
    t.triangles = mesh.triangles;
    p.initial = pack_sphere(mesh.vertices);
    if (mode == Mode::hybrid) p.params.jacobian = std::make_shared<BlurredJacobianField>(projection);
  }
  return p;
}

CostTables projection_tables(const Mesh& mesh, const ProjectionOptions& projection) {
  CostTables t;
  t.triangles = mesh.triangles;
  t.frames = initial_frames(mesh);
  t.portions.assign(mesh.triangles.size(), {});
  t.scales.assign(mesh.triangles.size(), 1.0);
  t.north_pole = mesh.north_pole;
  t.antimeridian = mesh.antimeridian;
  t.antimeridian_weights = antimeridian_weights(mesh, projection.antimeridian);
  return t;
}

namespace {

std::vector<bool> most_distorted(const Mesh& mesh, const State& x, const CostTables& tables,
                                 const JacobianField& jacobian, double fraction) {
  const std::size_t nt = mesh.triangles.size();
  std::vector<std::pair<double, std::size_t>> scored(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    const SphereTriangle st = sphere_K(x.segment<3>(3 * tri[0]), x.segment<3>(3 * tri[1]),
                                       x.segment<3>(3 * tri[2]), tables.frames[t]);
    scored[t] = {shape_distortion(jacobian.sample(st.midpoint).value * st.K), t};
  }
  const std::size_t count =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(fraction * nt)), 1, nt);
  std::partial_sort(scored.begin(), scored.begin() + count, scored.end(),
                    [](const auto& a, const auto& b) {
                      return a.first > b.first || (a.first == b.first && a.second < b.second);
                    });
  std::vector<bool> marks(nt, false);
  for (std::size_t i = 0; i < count; ++i) marks[scored[i].second] = true;
  return marks;
}

}  // namespace

SolveResult run_projection(const Mesh& mesh, const RegionSet& land_mask,
                           std::shared_ptr<const JacobianField> jacobian,
                           const ProjectionOptions& projection, const SolverOptions& options,
                           const PortionTable* initial_land) {
  if (!jacobian) throw ConfigError("projection: a target projection is required");
  if (!mesh.north_pole) throw ConfigError("projection mode needs a north pole vertex");
  if (projection.scale_ratios.empty()) throw ConfigError("projection: scale ratio list is empty");

  Mesh current = mesh;
  State x = pack_sphere(current.vertices);
  SolveResult result;
  result.mode = Mode::projection;

  CostParams params;
  params.mode = Mode::projection;
  params.error_weight = 0.0;
  params.distortion_weight = 1.0;
  params.pole_weight = projection.pole_weight;
  params.jacobian = jacobian;

  PortionTable land =
      initial_land ? *initial_land : compute_portions(current, land_mask, options.threads);
  for (std::size_t phase = 0; phase < projection.scale_ratios.size(); ++phase) {
    const CostTables tables = projection_tables(current, projection);
    WeightConfig wc;
    wc.shape = projection.shape_weight;
    wc.scale = projection.shape_weight * projection.scale_ratios[phase];
    wc.water_factor = projection.water_factor;
    params.weights = make_weights(land.land, tables.scales, {}, wc);

    SolverOptions opts = options;
    opts.fixed_vertices = {*current.north_pole};
    SolverState state;
    state.x = x;
    const Stage stage{0.0, 1.0, projection.gamma, projection.max_steps};
    result.stages.push_back(
        run_stage(state, params, tables, stage, static_cast<int>(phase + 1), opts));
    x = std::move(state.x);

    if (static_cast<int>(phase + 1) == projection.subdivide_after &&
        phase + 1 < projection.scale_ratios.size()) {
      const auto marks = most_distorted(current, x, tables, *jacobian, projection.subdivide_fraction);
      const Refinement ref = refine(current, marks);
      State next(3 * ref.mesh.vertices.size());
      next.head(x.size()) = x;
      for (std::size_t j = 0; j < ref.new_vertex_edges.size(); ++j) {
        const auto [a, b] = ref.new_vertex_edges[j];
        next.segment<3>(x.size() + 3 * j) = nzd(x.segment<3>(3 * a) + x.segment<3>(3 * b));
      }
      x = std::move(next);
      current = ref.mesh;
      result.mesh = current;
      land = compute_portions(current, land_mask, options.threads);
    }
  }
  result.state = std::move(x);
  return result;
}

}  // namespace cartogram
