#pragma once

#include "cartogram/distortion.hpp"
#include "cartogram/mesh.hpp"
#include "cartogram/projections.hpp"
#include "cartogram/regions.hpp"
#include "cartogram/types.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace cartogram {

enum class Mode { plane, sphere, hybrid, projection };

std::string_view mode_name(Mode mode);
/// Throws ConfigError for unknown names.
Mode parse_mode(std::string_view name);

/// Coordinates per vertex: 2 in the plane, 3 on the sphere.
inline int vertex_dimension(Mode mode) { return mode == Mode::plane ? 2 : 3; }

/// Flat vertex coordinates, vertex i at [dim*i, dim*i + dim).
using State = Eigen::VectorXd;

State pack_plane(std::span<const Vec2> positions);
State pack_sphere(std::span<const Vec3> positions);
std::vector<Vec2> unpack_plane(const State& state);
std::vector<Vec3> unpack_sphere(const State& state);

/// Knobs of the weight families.
struct WeightConfig {
  double shape = 0.5;  // alpha^shape
  double scale = 0.2;  // alpha^scale
  double water_factor = 0.1;  // alpha^land of an all-water triangle
  double density_floor = 0.2;  // alpha^density = floor + (1 - floor) s_T
};

struct Weights {
  std::vector<double> shape;  // per triangle
  std::vector<double> scale;  // per triangle
  std::vector<double> region;  // w^error_R = 1 / p_R
};

/// w^shape_T = alpha^shape alpha^land_T alpha^density_T, likewise for scale;
/// land means any region covers part of the triangle.
Weights make_weights(std::span<const double> land, std::span<const double> scales,
                     std::span<const double> populations, const WeightConfig& config = {});

/// Antimeridian penalty weight profile by latitude.
struct AntimeridianProfile {
  double north = 10.0;  // north of north_lat
  double middle = 1.0;
  double south = 0.0;  // south of south_lat
  double north_lat = deg_to_rad(45.0);
  double south_lat = deg_to_rad(-60.0);

  double weight(double lat) const;
};

/// Per-vertex weights for mesh.antimeridian, in the same order.
std::vector<double> antimeridian_weights(const Mesh& mesh, const AntimeridianProfile& profile = {});

/// Data that stays constant while a state is optimized.
struct CostTables {
  std::vector<Triangle> triangles;
  std::vector<TriangleFrame> frames;
  /// Sparse psi per triangle, sorted by region.
  std::vector<std::vector<PortionEntry>> portions;
  std::vector<double> populations;  // p_R
  std::vector<double> scales;  // s_T
  /// Plane mode.
  BoundaryQuadrants quadrants;
  /// Hybrid and projection modes.
  std::optional<VertexIndex> north_pole;
  std::vector<VertexIndex> antimeridian;
  std::vector<double> antimeridian_weights;
};

struct CostParams {
  Mode mode = Mode::plane;
  double error_weight = 1.0;  // W^error
  double distortion_weight = 0.1;  // W^dist
  Weights weights;
  double boundary_weight = 1e-6;
  double pole_weight = 1e3;
  /// Blurred Jacobian of the target projection; only shape distortion reads
  /// it. Required in hybrid and projection modes.
  std::shared_ptr<const JacobianField> jacobian;
};

struct CostBreakdown {
  double total = 0.0;
  double error = 0.0;  // E
  double distortion = 0.0;  // D, penalties included
  double shape = 0.0;
  double scale = 0.0;
  double boundary = 0.0;
  double pole = 0.0;
  double antimeridian = 0.0;
  std::vector<double> region_areas;  // mu_R
  std::vector<double> region_errors;  // epsilon_R

  bool finite() const { return total < kInfinity; }
};

/// Checks table and parameter sizes against each other and the state.
/// Throws ConfigError.
void validate(const State& state, const CostParams& params, const CostTables& tables);

/// Cost without gradient; total is +inf when any triangle is flipped or
/// degenerate or a plane boundary condition is violated.
CostBreakdown evaluate_cost(const State& state, const CostParams& params,
                            const CostTables& tables, int threads = 1);

/// Cost and gradient. Per-triangle work may run on `threads` workers; the
/// reduction always happens in triangle order so the result does not depend
/// on the thread count. Throws ContractViolation when the cost is infinite.
CostBreakdown cost_and_gradient(const State& state, const CostParams& params,
                                const CostTables& tables, State& gradient, int threads = 1);

/// Same, but returns an infinite breakdown (gradient untouched) instead of
/// throwing. Used by the line search to test and accept a trial state with
/// one evaluation.
CostBreakdown cost_and_gradient_if_finite(const State& state, const CostParams& params,
                                          const CostTables& tables, State& gradient,
                                          int threads = 1);

/// g_i - (g_i . v_i) v_i for every vertex.
State project_gradient_to_sphere(const State& state, const State& gradient);

/// det K of every triangle (measured in its tangent plane on the sphere).
/// Flipped or degenerate triangles give values at or below the tolerance.
std::vector<double> triangle_determinants(const State& state, Mode mode,
                                          const CostTables& tables);

}  // namespace cartogram
