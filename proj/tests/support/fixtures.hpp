#pragma once

#include <cartogram/cost.hpp>
#include <cartogram/mesh.hpp>
#include <cartogram/optimizer.hpp>
#include <cartogram/projections.hpp>
#include <cartogram/regions.hpp>

#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace cartogram::testing {

/// Lon/lat box in degrees (map frame), edges densified every `step_deg`.
SphericalPolygon lonlat_box(double lon0, double lon1, double lat0, double lat1,
                            double step_deg = 5.0);

Region box_region(const std::string& id, double value, double lon0, double lon1, double lat0,
                  double lat1);

/// Three disjoint boxes with values 5:3:1, mirroring data/three_regions.geojson.
RegionSet three_regions();

/// Two large boxes used as a synthetic land mask.
RegionSet two_continents();

/// Star-shaped polygon around `center`: vertices at sorted angles with radii
/// (as tangents of angular radii) in [min_radius, max_radius].
struct StarRegion {
  Vec3 center;
  double max_radius = 0.0;  // angular
  std::vector<Vec3> ring;
};

StarRegion random_star_region(std::mt19937_64& rng, double min_radius, double max_radius);

RegionSet single_region(const std::vector<Vec3>& ring, double value = 1.0);

/// Point-in-polygon by crossing number in the gnomonic plane at the region
/// center, where the region's arcs are straight lines.
bool star_contains(const StarRegion& region, const Vec3& p);

/// Fraction of the flat triangle (a, b, c) whose radial projection lands in
/// `region`, from jittered stratified samples.
double monte_carlo_portion(const StarRegion& region, const Vec3& a, const Vec3& b, const Vec3& c,
                           std::size_t samples, std::mt19937_64& rng);

/// Jacobian of `projection` in the graticule basis from central differences
/// of forward().
Mat2 numeric_jacobian(const TargetProjection& projection, const LonLat& p, double h = 1e-6);

/// Coordinates of the graticule basis at n0, carried to the tangent plane
/// at n by orthogonal projection and expressed in the graticule basis at n.
Mat2 transported_basis(const Vec3& n0, const Vec3& n);

/// Central differences of f at x with step h.
Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h);

struct GradientComparison {
  std::size_t checked = 0;
  std::size_t failures = 0;
  double worst_relative = 0.0;
  double worst_absolute = 0.0;
};

/// Each component passes if its relative error is below rel_tol or its
/// absolute error is below abs_tol.
GradientComparison compare_gradients(const Eigen::VectorXd& analytic,
                                     const Eigen::VectorXd& numeric, double rel_tol,
                                     double abs_tol);

/// Removes the radial component of every vertex block.
Eigen::VectorXd tangent_part(const State& x, const Eigen::VectorXd& g);

/// A cost evaluation problem in any mode on an octahedral mesh.
struct Problem {
  Mesh mesh;
  RegionSet regions;
  PortionTable portions;
  State initial;
  CostParams params;
  CostTables tables;
};

/// Cartogram modes go through cartogram_problem; projection mode mirrors
/// run_projection's first phase with the given scale ratio.
Problem make_problem(Mode mode, int frequency, RegionSet regions,
                     const std::string& projection = "mollweide", double scale_ratio = 1.0);

/// Random perturbation of magnitude `amount` per coordinate; sphere states
/// are renormalized. Retries with smaller noise until the cost is finite.
State perturbed(const Problem& problem, double amount, std::mt19937_64& rng);

/// Fresh empty directory under the system temp directory.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace cartogram::testing
