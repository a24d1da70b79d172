#pragma once

#include "cartogram/cost.hpp"
#include "cartogram/mesh.hpp"
#include "cartogram/regions.hpp"

#include <deque>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace cartogram {

struct Stage {
  double error_weight = 1.0;
  double distortion_weight = 0.1;
  double gamma = 0.01;  // stop when the inf-norm of the gradient drops below
  long max_steps = 200'000;
};

struct StageSchedule {
  std::vector<Stage> stages;

  /// Stage k (1-based): W^error = 1, W^dist = 10^-k, gamma = 10^-(1+k).
  static StageSchedule cartogram(int count = 10);
};

/// One accepted step, reported to the observer.
struct StepRecord {
  int stage = 0;
  long step = 0;
  double cost_before = 0.0;
  double cost_after = 0.0;
  /// S . G for the accepted step S (already halved) and the modified
  /// gradient G at the old state.
  double slope = 0.0;
  double step_scale = 1.0;
  int halvings = 0;
  double error = 0.0;
  double distortion = 0.0;
  double gradient_norm = 0.0;  // at the new state
  /// Smallest det K over all triangles at the new state.
  double min_det = 0.0;
};

using StepObserver = std::function<void(const StepRecord&)>;

struct SolverOptions {
  int memory = 10;
  double armijo = 0.1;
  int max_halvings = 60;
  /// Largest coordinate move of the first, steepest-descent step.
  double first_step = 1e-2;
  int threads = 1;
  /// Vertices held fixed (excluded from the variables).
  std::vector<VertexIndex> fixed_vertices;
  /// One line per accepted step when set.
  std::ostream* progress = nullptr;
  StepObserver observer;
  /// Compute min det K for StepRecord (costs one extra pass per step).
  bool track_min_det = false;
};

struct SolverState {
  State x;
  State gradient;  // modified gradient: tangent on the sphere, zero on fixed vertices
  CostBreakdown cost;
  std::deque<std::pair<State, State>> history;  // (s, y), newest last
  long steps = 0;
};

/// L-BFGS two-loop recursion on the stored history, skipping pairs with
/// y.s <= 0; scaled steepest descent when no pair is usable. Throws NumericError for a non-finite gradient.
State lbfgs_direction(const SolverState& state, const SolverOptions& options);

/// Sufficient decrease: after - before <= c * slope, where slope is the
/// directional derivative along the (already scaled) step.
bool armijo_accepts(double before, double after, double slope, double c);

struct LineSearchResult {
  bool accepted = false;
  State x;
  State gradient;
  CostBreakdown cost;
  double scale = 1.0;
  int halvings = 0;
};

/// Backtracking from the full step, halving until the Armijo condition
/// C(next) - C <= c (t S) . G holds with a finite cost. On the sphere each
/// trial vertex is nzd(v + s). Gives up after max_halvings halvings.
LineSearchResult line_search(const SolverState& state, const State& direction,
                             const CostParams& params, const CostTables& tables,
                             const SolverOptions& options);

/// Applies a step: plain addition in the plane, per-vertex normalization on
/// the sphere. Fixed vertices are copied unchanged.
State apply_step(const State& x, const State& step, Mode mode,
                 const std::vector<char>& fixed);

struct StageStats {
  int index = 0;
  double error_weight = 0.0;
  double distortion_weight = 0.0;
  double gamma = 0.0;
  long steps = 0;
  bool converged = false;
  double cost = 0.0;
  double error = 0.0;
  double distortion = 0.0;
  double gradient_norm = 0.0;
  double median_rel_error = 0.0;
  double max_rel_error = 0.0;
  /// Wall time; kept out of result files so reruns are byte-identical.
  double seconds = 0.0;
};

/// Runs one stage from `state` (history is cleared first). Returns with the
/// gradient below gamma or when the step cap is hit. Throws NumericError if
/// the line search fails even from a steepest-descent direction.
StageStats run_stage(SolverState& state, const CostParams& params, const CostTables& tables,
                     const Stage& stage, int index, const SolverOptions& options);

struct SolveResult {
  Mode mode = Mode::plane;
  State state;
  std::vector<StageStats> stages;
  std::vector<double> region_areas;
  std::vector<double> populations;
  /// Mesh actually optimized when it differs from the input (projection
  /// mode with subdivision).
  std::optional<Mesh> mesh;
};

/// Evaluates the initial cost and gradient of `x`. Throws NumericError if
/// the cost is infinite.
SolverState start_solver(const State& x, const CostParams& params, const CostTables& tables,
                         const SolverOptions& options);

/// Weight overrides for a cartogram problem.
struct CartogramOptions {
  WeightConfig weights;
  double boundary_weight = 1e-6;
  double pole_weight = 1e3;
  AntimeridianProfile antimeridian;
};

/// Initial state, parameters and tables of a cartogram run.
struct CartogramProblem {
  State initial;
  CostParams params;
  CostTables tables;
};

/// Fills the regions' initial areas and populations, derives intended
/// scales and weights, and lays out the initial state: the projected,
/// cut mesh in plane mode, the sphere vertices otherwise. Hybrid mode
/// uses the blurred Jacobian of `projection`.
CartogramProblem cartogram_problem(const Mesh& mesh, RegionSet& regions,
                                   const PortionTable& portions, Mode mode,
                                   std::shared_ptr<const TargetProjection> projection,
                                   const CartogramOptions& options = {});

/// Chains the stages, each starting where the previous one stopped.
SolveResult run_cartogram(const State& initial, const CostParams& params,
                          const CostTables& tables, const StageSchedule& schedule,
                          const SolverOptions& options = {});

struct ProjectionOptions {
  std::vector<double> scale_ratios{0.1, 1.0, 10.0, 100.0};  // alpha^scale / alpha^shape
  double shape_weight = 0.5;
  double water_factor = 0.01;
  double gamma = 1e-6;
  long max_steps = 200'000;
  double pole_weight = 1e3;
  AntimeridianProfile antimeridian;
  /// Subdivide the most shape-distorted triangles after this many ratio
  /// phases; negative disables.
  int subdivide_after = -1;
  double subdivide_fraction = 0.01;
};

/// Optimizes a map projection: cartographic error ignored, every intended
/// scale 1, land triangles (covered by `land_mask`) weighted above water,
/// the North Pole vertex held fixed. `land` may carry the land mask's
/// portions on `mesh` to skip recomputing them.
SolveResult run_projection(const Mesh& mesh, const RegionSet& land_mask,
                           std::shared_ptr<const JacobianField> jacobian,
                           const ProjectionOptions& projection = {},
                           const SolverOptions& options = {},
                           const PortionTable* land = nullptr);

/// Tables for projection mode on `mesh`: s_T = 1, no regions in E.
CostTables projection_tables(const Mesh& mesh, const ProjectionOptions& projection);

/// |epsilon_R| / p_R per region.
std::vector<double> relative_errors(std::span<const double> areas,
                                    std::span<const double> populations);
double median(std::vector<double> values);

}  // namespace cartogram
