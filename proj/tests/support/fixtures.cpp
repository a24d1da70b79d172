#include "fixtures.hpp"

#include <cartogram/projections.hpp>

#include <algorithm>
#include <cmath>

namespace cartogram::testing {

namespace {

Vec3 from_degrees(double lon, double lat) {
  return lonlat_to_point({deg_to_rad(lon), deg_to_rad(lat)});
}

// Orthonormal pair spanning the plane perpendicular to c.
std::pair<Vec3, Vec3> plane_basis(const Vec3& c) {
  const Vec3 helper = std::abs(c.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  const Vec3 u = helper.cross(c).normalized();
  return {u, c.cross(u)};
}

}  // namespace

SphericalPolygon lonlat_box(double lon0, double lon1, double lat0, double lat1, double step_deg) {
  const int nx = std::max(1, static_cast<int>(std::ceil((lon1 - lon0) / step_deg)));
  const int ny = std::max(1, static_cast<int>(std::ceil((lat1 - lat0) / step_deg)));
  SphericalPolygon poly;
  for (int i = 0; i < nx; ++i) poly.outer.push_back(from_degrees(lon0 + (lon1 - lon0) * i / nx, lat0));
  for (int i = 0; i < ny; ++i) poly.outer.push_back(from_degrees(lon1, lat0 + (lat1 - lat0) * i / ny));
  for (int i = 0; i < nx; ++i) poly.outer.push_back(from_degrees(lon1 - (lon1 - lon0) * i / nx, lat1));
  for (int i = 0; i < ny; ++i) poly.outer.push_back(from_degrees(lon0, lat1 - (lat1 - lat0) * i / ny));
  normalize_polygon(poly);
  return poly;
}

Region box_region(const std::string& id, double value, double lon0, double lon1, double lat0,
                  double lat1) {
  Region r;
  r.id = id;
  r.value = value;
  r.polygons.push_back(lonlat_box(lon0, lon1, lat0, lat1));
  return r;
}

RegionSet three_regions() {
  RegionSet set;
  set.regions.push_back(box_region("north", 5.0, -30, 30, 10, 50));
  set.regions.push_back(box_region("east", 3.0, 40, 100, -20, 30));
  set.regions.push_back(box_region("south", 1.0, -110, -50, -50, 0));
  return set;
}

RegionSet two_continents() {
  RegionSet set;
  set.regions.push_back(box_region("west_continent", 1.0, -120, -50, -50, 65));
  set.regions.push_back(box_region("east_continent", 1.0, -10, 130, -35, 70));
  return set;
}

StarRegion random_star_region(std::mt19937_64& rng, double min_radius, double max_radius) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  StarRegion region;
  region.center = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
  const auto [u, w] = plane_basis(region.center);
  const int count = 5 + static_cast<int>(uni(rng) * 8);
  std::vector<double> angles(count);
  for (int i = 0; i < count; ++i) angles[i] = (i + 0.2 + 0.6 * uni(rng)) * 2.0 * kPi / count;
  for (double a : angles) {
    const double radius = min_radius + (max_radius - min_radius) * uni(rng);
    region.max_radius = std::max(region.max_radius, radius);
    const double t = std::tan(radius);
    region.ring.push_back((region.center + t * (std::cos(a) * u + std::sin(a) * w)).normalized());
  }
  return region;
}

RegionSet single_region(const std::vector<Vec3>& ring, double value) {
  Region r;
  r.id = "r";
  r.value = value;
  SphericalPolygon poly;
  poly.outer = ring;
  normalize_polygon(poly);
  r.polygons.push_back(std::move(poly));
  RegionSet set;
  set.regions.push_back(std::move(r));
  return set;
}

bool star_contains(const StarRegion& region, const Vec3& p) {
  const Vec3& c = region.center;
  if (p.dot(c) <= std::cos(std::min(region.max_radius + 1e-6, kPi / 2 - 1e-3))) return false;
  const auto [u, w] = plane_basis(c);
  auto gnomonic = [&](const Vec3& v) {
    const Vec3 q = v / v.dot(c);
    return Vec2(q.dot(u), q.dot(w));
  };
  const Vec2 q = gnomonic(p);
  bool inside = false;
  const std::size_t n = region.ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = gnomonic(region.ring[i]);
    const Vec2 b = gnomonic(region.ring[j]);
    if ((a.y() > q.y()) != (b.y() > q.y()) &&
        q.x() < (b.x() - a.x()) * (q.y() - a.y()) / (b.y() - a.y()) + a.x()) {
      inside = !inside;
    }
  }
  return inside;
}

double monte_carlo_portion(const StarRegion& region, const Vec3& a, const Vec3& b, const Vec3& c,
                           std::size_t samples, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const auto k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(samples))));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double s = (i + uni(rng)) / k;
      double t = (j + uni(rng)) / k;
      if (s + t > 1.0) {
        s = 1.0 - s;
        t = 1.0 - t;
      }
      const Vec3 p = a + s * (b - a) + t * (c - a);
      if (star_contains(region, p.normalized())) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(k * k);
}

Mat2 numeric_jacobian(const TargetProjection& projection, const LonLat& p, double h) {
  const Vec2 dlon = (projection.forward({p.lon + h, p.lat}) -
                     projection.forward({p.lon - h, p.lat})) / (2 * h);
  const Vec2 dlat = (projection.forward({p.lon, p.lat + h}) -
                     projection.forward({p.lon, p.lat - h})) / (2 * h);
  Mat2 j;
  j.col(0) = dlon / std::cos(p.lat);
  j.col(1) = dlat;
  return j;
}

Mat2 transported_basis(const Vec3& n0, const Vec3& n) {
  const TangentBasis ref = graticule_basis(n0);
  const TangentBasis here = graticule_basis(n);
  auto carry = [&](const Vec3& v) { return Vec3((v - v.dot(n) * n).normalized()); };
  const Vec3 t0 = carry(ref.east), t1 = carry(ref.north);
  Mat2 r;
  r << here.east.dot(t0), here.east.dot(t1), here.north.dot(t0), here.north.dot(t1);
  return r;
}

Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

GradientComparison compare_gradients(const Eigen::VectorXd& analytic,
                                     const Eigen::VectorXd& numeric, double rel_tol,
                                     double abs_tol) {
  GradientComparison out;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double diff = std::abs(analytic[i] - numeric[i]);
    const double scale = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
    const double rel = scale > 0.0 ? diff / scale : 0.0;
    ++out.checked;
    if (rel >= rel_tol && diff >= abs_tol) {
      ++out.failures;
      out.worst_relative = std::max(out.worst_relative, rel);
    }
    out.worst_absolute = std::max(out.worst_absolute, diff);
  }
  return out;
}

Eigen::VectorXd tangent_part(const State& x, const Eigen::VectorXd& g) {
  Eigen::VectorXd out = g;
  for (Eigen::Index i = 0; i < x.size(); i += 3) {
    const Vec3 v = x.segment<3>(i).normalized();
    out.segment<3>(i) -= out.segment<3>(i).dot(v) * v;
  }
  return out;
}

Problem make_problem(Mode mode, int frequency, RegionSet regions, const std::string& projection,
                     double scale_ratio) {
  Problem p;
  p.mesh = build_octahedral_mesh(frequency);
  p.portions = compute_portions(p.mesh, regions);
  std::shared_ptr<const TargetProjection> target = make_projection(projection);
  if (mode == Mode::projection) {
    ProjectionOptions po;
    p.tables = projection_tables(p.mesh, po);
    p.params.mode = Mode::projection;
    p.params.error_weight = 0.0;
    p.params.distortion_weight = 1.0;
    p.params.pole_weight = po.pole_weight;
    p.params.jacobian = std::make_shared<BlurredJacobianField>(target);
    WeightConfig wc;
    wc.shape = po.shape_weight;
    wc.scale = po.shape_weight * scale_ratio;
    wc.water_factor = po.water_factor;
    p.params.weights = make_weights(p.portions.land, p.tables.scales, {}, wc);
    p.initial = pack_sphere(p.mesh.vertices);
  } else {
    CartogramProblem cp = cartogram_problem(p.mesh, regions, p.portions, mode, target);
    p.initial = std::move(cp.initial);
    p.params = std::move(cp.params);
    p.tables = std::move(cp.tables);
  }
  p.regions = std::move(regions);
  return p;
}

State perturbed(const Problem& problem, double amount, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const bool sphere = problem.params.mode != Mode::plane;
  for (int attempt = 0; attempt < 20; ++attempt, amount *= 0.5) {
    State x = problem.initial;
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += amount * uni(rng);
    if (sphere) {
      for (Eigen::Index i = 0; i < x.size(); i += 3) x.segment<3>(i).normalize();
    }
    if (evaluate_cost(x, problem.params, problem.tables).finite()) return x;
  }
  return problem.initial;
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cartogram-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace cartogram::testing
