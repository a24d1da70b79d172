#include "fixtures.hpp"

#include <cartogram/regions.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace cartogram;
using namespace cartogram::testing;

namespace {

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

std::vector<double> frame_areas(const Mesh& mesh) {
  std::vector<double> out;
  for (const auto& f : initial_frames(mesh)) out.push_back(f.area);
  return out;
}

PortionTable table_of(std::size_t triangles, std::size_t regions) {
  PortionTable t;
  t.by_triangle.resize(triangles);
  t.land.assign(triangles, 0.0);
  t.region_count = regions;
  return t;
}

void add(PortionTable& t, std::size_t tri, std::uint32_t region, double psi) {
  t.by_triangle[tri].push_back({region, psi});
  t.land[tri] += psi;
}

}  // namespace

TEST(Populations, Examples) {
  const std::vector<double> one = scale_populations(std::vector<double>{7.0},
                                                    std::vector<double>{0.5});
  EXPECT_NEAR(one[0], 0.5, 1e-15);

  const auto p = scale_populations(std::vector<double>{1.0, 3.0}, std::vector<double>{1.2, 0.8});
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  EXPECT_NEAR(p[1], 1.5, 1e-15);

  const std::vector<double> areas{0.3, 0.9, 1.7};
  const auto same = scale_populations(std::vector<double>{0.6, 1.8, 3.4}, areas);
  for (std::size_t i = 0; i < areas.size(); ++i) EXPECT_NEAR(same[i], areas[i], 1e-15);

  EXPECT_THROW(scale_populations(std::vector<double>{0.0}, std::vector<double>{1.0}), InputError);
  EXPECT_THROW(scale_populations(std::vector<double>{-1.0}, std::vector<double>{1.0}),
               InputError);
}

TEST(Portions, FullAndEmptyTriangles) {
  const Mesh mesh = build_octahedral_mesh(4);
  // Cover triangle 0 completely with a slightly enlarged copy of itself.
  const auto& t = mesh.triangles[0];
  const Vec3 c = nzd(mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]);
  std::vector<Vec3> ring;
  for (auto v : t) ring.push_back(nzd(c + 1.05 * (mesh.vertices[v] - c)));
  const RegionSet set = single_region(ring);
  const PortionTable table = compute_portions(mesh, set);
  EXPECT_NEAR(table.portion(0, 0), 1.0, 1e-12);
  std::size_t nonzero = 0;
  for (std::size_t tri = 0; tri < mesh.triangle_count(); ++tri) {
    if (!table.by_triangle[tri].empty()) ++nonzero;
    for (const auto& e : table.by_triangle[tri]) {
      EXPECT_GT(e.portion, 0.0);
      EXPECT_LE(e.portion, 1.0);
    }
  }
  // Only the triangle and its close neighbours are touched.
  EXPECT_LE(nonzero, 13u);
  double far = 0.0;
  for (std::size_t tri = 0; tri < mesh.triangle_count(); ++tri) {
    if (angular_distance(c, nzd(mesh.vertices[mesh.triangles[tri][0]])) > 1.2) {
      far += table.portion(0, tri);
    }
  }
  EXPECT_EQ(far, 0.0);
}

TEST(Portions, MatchMonteCarlo) {
  const Mesh mesh = build_octahedral_mesh(4);
  std::mt19937_64 rng(11);
  for (int r = 0; r < 5; ++r) {
    const StarRegion region = random_star_region(rng, 0.15, 0.5);
    const PortionTable table = compute_portions(mesh, single_region(region.ring));
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
      const auto& tri = mesh.triangles[t];
      const Vec3 mid = nzd(mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]);
      if (angular_distance(mid, region.center) > region.max_radius + 0.6) continue;
      const double mc = monte_carlo_portion(region, mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                            mesh.vertices[tri[2]], 40000, rng);
      EXPECT_NEAR(table.portion(0, t), mc, 2e-2) << "region " << r << " triangle " << t;
    }
  }
}

TEST(Portions, DisjointRegionsSumBelowOne) {
  const Mesh mesh = build_octahedral_mesh(6);
  const PortionTable table = compute_portions(mesh, three_regions());
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    double total = 0.0;
    for (const auto& e : table.by_triangle[t]) total += e.portion;
    EXPECT_LE(total, 1.0 + 1e-12);
    EXPECT_NEAR(table.land[t], total, 1e-15);
  }
}

TEST(Portions, OverlapIsRejected) {
  const Mesh mesh = build_octahedral_mesh(4);
  RegionSet set;
  set.regions.push_back(box_region("a", 1, 0, 40, 0, 40));
  set.regions.push_back(box_region("b", 1, 20, 60, 20, 60));
  EXPECT_THROW(compute_portions(mesh, set), GeometryError);
}

TEST(Portions, IndependentOfThreadCount) {
  const Mesh mesh = build_octahedral_mesh(12);
  const PortionTable one = compute_portions(mesh, three_regions(), 1);
  const PortionTable many = compute_portions(mesh, three_regions(), 4);
  ASSERT_EQ(one.by_triangle.size(), many.by_triangle.size());
  for (std::size_t t = 0; t < one.by_triangle.size(); ++t) {
    ASSERT_EQ(one.by_triangle[t].size(), many.by_triangle[t].size());
    for (std::size_t i = 0; i < one.by_triangle[t].size(); ++i) {
      EXPECT_EQ(one.by_triangle[t][i].portion, many.by_triangle[t][i].portion);
    }
  }
}

TEST(Portions, JsonRoundTrip) {
  const Mesh mesh = build_octahedral_mesh(4);
  const PortionTable table = compute_portions(mesh, three_regions());
  const CachedPortions back = portions_from_json(portions_to_json(table, "m", "r"));
  EXPECT_EQ(back.mesh_hash, "m");
  EXPECT_EQ(back.regions_hash, "r");
  EXPECT_EQ(back.table.land, table.land);
  EXPECT_EQ(back.table.region_count, table.region_count);
  for (std::size_t t = 0; t < table.triangle_count(); ++t) {
    ASSERT_EQ(back.table.by_triangle[t].size(), table.by_triangle[t].size());
    for (std::size_t i = 0; i < table.by_triangle[t].size(); ++i) {
      EXPECT_EQ(back.table.by_triangle[t][i].region, table.by_triangle[t][i].region);
      EXPECT_EQ(back.table.by_triangle[t][i].portion, table.by_triangle[t][i].portion);
    }
  }
  EXPECT_THROW(portions_from_json("[1, 2]"), InputError);
}

TEST(InitialAreas, Examples) {
  PortionTable t = table_of(2, 1);
  add(t, 0, 0, 1.0);
  EXPECT_NEAR(initial_region_areas(t, std::vector<double>{0.3, 0.7})[0], 0.3, 1e-15);

  PortionTable half = table_of(2, 1);
  add(half, 0, 0, 0.5);
  add(half, 1, 0, 0.5);
  EXPECT_NEAR(initial_region_areas(half, std::vector<double>{0.3, 0.7})[0], 0.5, 1e-15);
}

TEST(InitialAreas, PartitionOfLand) {
  // Four lunes of 90 degrees each cover the sphere; their initial areas add
  // up to the total flat area of the mesh. The first set has edges on mesh
  // meridians, the second has one lune across the antimeridian.
  const Mesh mesh = build_octahedral_mesh(6);
  for (double offset : {0.0, 10.0}) {
    RegionSet set;
    for (int k = 0; k < 4; ++k) {
      Region r;
      r.id = "lune" + std::to_string(k);
      r.value = 1.0;
      SphericalPolygon p;
      const double lon0 = -180.0 + offset + 90.0 * k;
      p.outer.push_back(Vec3(0, 0, -1));
      for (double lat : {-45.0, 0.0, 45.0}) {
        p.outer.push_back(lonlat_to_point({deg_to_rad(lon0 + 90.0), deg_to_rad(lat)}));
      }
      p.outer.push_back(Vec3(0, 0, 1));
      for (double lat : {45.0, 0.0, -45.0}) {
        p.outer.push_back(lonlat_to_point({deg_to_rad(lon0), deg_to_rad(lat)}));
      }
      normalize_polygon(p);
      r.polygons.push_back(std::move(p));
      set.regions.push_back(std::move(r));
    }
    const PortionTable table = compute_portions(mesh, set);
    const auto areas = frame_areas(mesh);
    const auto mu = initial_region_areas(table, areas);
    EXPECT_NEAR(sum(mu), sum(areas), 1e-8);
    for (double land : table.land) EXPECT_NEAR(land, 1.0, 1e-9) << offset;
  }
}

TEST(IntendedScales, Examples) {
  const Mesh mesh = build_octahedral_mesh(1);
  const auto areas = frame_areas(mesh);

  PortionTable full = table_of(8, 1);
  for (std::size_t t = 0; t < 8; ++t) add(full, t, 0, 1.0);
  const auto doubled = intended_scales(full, std::vector<double>{2.0}, std::vector<double>{1.0},
                                       mesh.triangles, areas);
  for (double s : doubled) EXPECT_NEAR(s, 2.0, 1e-12);

  PortionTable mixed = table_of(8, 2);
  for (std::size_t t = 0; t < 8; ++t) {
    add(mixed, t, 0, 0.25);
    add(mixed, t, 1, 0.25);
  }
  const auto avg = intended_scales(mixed, std::vector<double>{2.0, 4.0},
                                   std::vector<double>{1.0, 1.0}, mesh.triangles, areas);
  for (double s : avg) EXPECT_NEAR(s, 3.0, 1e-12);

  PortionTable water = table_of(8, 1);
  for (std::size_t t = 1; t < 8; ++t) add(water, t, 0, 1.0);
  const auto filled = intended_scales(water, std::vector<double>{5.0}, std::vector<double>{1.0},
                                      mesh.triangles, areas);
  EXPECT_NEAR(filled[0], 5.0, 1e-9);

  const auto none = intended_scales(table_of(8, 0), {}, {}, mesh.triangles, areas);
  for (double s : none) EXPECT_EQ(s, 1.0);
}

TEST(IntendedScales, WaterBlurIsBoundedByLand) {
  const Mesh mesh = build_octahedral_mesh(8);
  RegionSet set = three_regions();
  const PortionTable table = compute_portions(mesh, set);
  const auto frames = initial_frames(mesh);
  prepare_regions(set, table, frames);
  std::vector<double> pop, mu;
  for (const auto& r : set.regions) {
    pop.push_back(r.population);
    mu.push_back(r.initial_area);
  }
  const auto scales = intended_scales(table, pop, mu, mesh.triangles, frame_areas(mesh));
  double lo = kInfinity, hi = 0.0;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    lo = std::min(lo, pop[i] / mu[i]);
    hi = std::max(hi, pop[i] / mu[i]);
  }
  for (double s : scales) {
    EXPECT_GE(s, lo - 1e-9);
    EXPECT_LE(s, hi + 1e-9);
  }
}

TEST(PrepareRegions, IdentityErrorsSumToZero) {
  const Mesh mesh = build_octahedral_mesh(8);
  RegionSet set = three_regions();
  const PortionTable table = compute_portions(mesh, set);
  prepare_regions(set, table, initial_frames(mesh));
  double err = 0.0;
  for (const auto& r : set.regions) {
    EXPECT_GT(r.initial_area, 0.0);
    err += r.initial_area - r.population;
  }
  EXPECT_NEAR(err, 0.0, 1e-9);
  EXPECT_NEAR(set.regions[0].population / set.regions[2].population, 5.0, 1e-12);
}

TEST(PrepareRegions, RegionOutsideMeshCoverageFails) {
  const Mesh mesh = build_octahedral_mesh(2);
  RegionSet set = three_regions();
  PortionTable empty = table_of(mesh.triangle_count(), set.size());
  EXPECT_THROW(prepare_regions(set, empty, initial_frames(mesh)), InputError);
}

TEST(Subdivision, SmallRegionGetsFourTriangles) {
  const Mesh mesh = build_octahedral_mesh(4);
  const Vec3 c = nzd(mesh.vertices[mesh.triangles[3][0]] + mesh.vertices[mesh.triangles[3][1]] +
                     mesh.vertices[mesh.triangles[3][2]]);
  const auto [u, w] = std::pair{graticule_basis(c).east, graticule_basis(c).north};
  std::vector<Vec3> ring;
  for (int k = 0; k < 6; ++k) {
    const double a = 2 * kPi * k / 6;
    ring.push_back(nzd(c + 0.02 * (std::cos(a) * u + std::sin(a) * w)));
  }
  RegionSet set = single_region(ring);
  SubdivisionRules rules;
  rules.max_scaled_area = 1e9;
  rules.split_borders_once = false;
  rules.split_polar_cap_once = false;
  const Mesh fine = subdivide_until_satisfied(mesh, set, rules);
  const PortionTable table = compute_portions(fine, set);
  std::size_t covering = 0;
  for (const auto& entries : table.by_triangle) covering += entries.empty() ? 0 : 1;
  EXPECT_GE(covering, 4u);
}

TEST(Subdivision, NoRuleFiresKeepsMesh) {
  const Mesh mesh = build_octahedral_mesh(40);
  const RegionSet set = single_region(lonlat_box(-20, 20, 10, 30).outer);
  SubdivisionRules rules;
  rules.split_borders_once = false;
  rules.split_polar_cap_once = false;
  // One region means uniform scales; every triangle is already small.
  const PortionTable table = compute_portions(mesh, set);
  const std::vector<double> ones(mesh.triangle_count(), 1.0);
  const auto marks = mark_for_subdivision(mesh, table, ones, rules, false);
  EXPECT_EQ(std::count(marks.begin(), marks.end(), true), 0);
  EXPECT_EQ(subdivide_until_satisfied(mesh, set, rules).triangles, mesh.triangles);
}

TEST(Subdivision, SatisfiesScaledAreaRule) {
  const Mesh mesh = build_octahedral_mesh(6);
  RegionSet set = three_regions();
  const SubdivisionRules rules;
  const Mesh fine = subdivide_until_satisfied(mesh, set, rules);
  EXPECT_GT(fine.triangle_count(), mesh.triangle_count());
  const PortionTable table = compute_portions(fine, set);
  const auto frames = initial_frames(fine);
  prepare_regions(set, table, frames);
  std::vector<double> pop, mu, areas;
  for (const auto& r : set.regions) {
    pop.push_back(r.population);
    mu.push_back(r.initial_area);
  }
  for (const auto& f : frames) areas.push_back(f.area);
  const auto scales = intended_scales(table, pop, mu, fine.triangles, areas);
  const auto marks = mark_for_subdivision(fine, table, scales, rules, false);
  EXPECT_EQ(std::count(marks.begin(), marks.end(), true), 0);
  double total = 0.0;
  for (double a : spherical_triangle_areas(fine)) total += a;
  EXPECT_NEAR(total, 4 * kPi, 1e-8);
}

TEST(Subdivision, DepthLimit) {
  const Mesh mesh = build_octahedral_mesh(2);
  SubdivisionRules rules;
  rules.max_scaled_area = 1e-9;
  rules.max_depth = 2;
  EXPECT_THROW(subdivide_until_satisfied(mesh, three_regions(), rules), NumericError);
}

TEST(GeoJson, ReadsAndMerges) {
  const std::string text = R"({"type": "FeatureCollection", "features": [
    {"type": "Feature", "properties": {"id": "a", "value": 2},
     "geometry": {"type": "Polygon", "coordinates": [[[0,0],[10,0],[10,10],[0,10],[0,0]]]}},
    {"type": "Feature", "properties": {"id": "a", "value": 2},
     "geometry": {"type": "MultiPolygon", "coordinates": [[[[20,0],[30,0],[30,10],[20,10],[20,0]]]]}},
    {"type": "Feature", "properties": {"id": "b", "value": 0.5},
     "geometry": {"type": "Polygon", "coordinates": [[[0,-20],[0,-30],[10,-30],[10,-20],[0,-20]]]}}
  ]})";
  const RegionSet set = read_regions_geojson(text, 180.0);
  ASSERT_EQ(set.size(), 2u);
  EXPECT_EQ(set.regions[0].id, "a");
  EXPECT_EQ(set.regions[0].polygons.size(), 2u);
  EXPECT_EQ(set.regions[0].polygons[0].outer.size(), 4u);
  EXPECT_DOUBLE_EQ(set.regions[1].value, 0.5);
  // Clockwise input ring is reoriented.
  EXPECT_GT(spherical_polygon_area(set.regions[1].polygons[0].outer), 0.0);
  // Interruption at 180 leaves coordinates unrotated.
  const LonLat first = point_to_lonlat(set.regions[0].polygons[0].outer[0]);
  EXPECT_NEAR(rad_to_deg(first.lon), 0.0, 1e-12);
}

TEST(GeoJson, RotatesInterruptionToMapEdge) {
  const std::string text = R"({"type": "FeatureCollection", "features": [
    {"type": "Feature", "properties": {"id": "a", "value": 1},
     "geometry": {"type": "Polygon", "coordinates": [[[-169,0],[-160,0],[-160,10],[-169,0]]]}}]})";
  const RegionSet set = read_regions_geojson(text, -169.0);
  const LonLat first = point_to_lonlat(set.regions[0].polygons[0].outer[0]);
  EXPECT_NEAR(std::abs(rad_to_deg(first.lon)), 180.0, 1e-9);
}

TEST(GeoJson, RejectsBadInput) {
  EXPECT_THROW(read_regions_geojson("{"), InputError);
  EXPECT_THROW(read_regions_geojson(R"({"type": "Feature"})"), InputError);
  EXPECT_THROW(read_regions_geojson(R"({"type": "FeatureCollection", "features": []})"),
               InputError);
  const std::string zero = R"({"type": "FeatureCollection", "features": [
    {"type": "Feature", "properties": {"id": "a", "value": 0},
     "geometry": {"type": "Polygon", "coordinates": [[[0,0],[10,0],[10,10],[0,0]]]}}]})";
  EXPECT_THROW(read_regions_geojson(zero), InputError);
  const std::string point = R"({"type": "FeatureCollection", "features": [
    {"type": "Feature", "properties": {"id": "a", "value": 1},
     "geometry": {"type": "Point", "coordinates": [0, 0]}}]})";
  EXPECT_THROW(read_regions_geojson(point), InputError);
  const std::string disagree = R"({"type": "FeatureCollection", "features": [
    {"type": "Feature", "properties": {"id": "a", "value": 1},
     "geometry": {"type": "Polygon", "coordinates": [[[0,0],[10,0],[10,10],[0,0]]]}},
    {"type": "Feature", "properties": {"id": "a", "value": 2},
     "geometry": {"type": "Polygon", "coordinates": [[[20,0],[30,0],[30,10],[20,0]]]}}]})";
  EXPECT_THROW(read_regions_geojson(disagree), InputError);
  const std::string bowtie = R"({"type": "FeatureCollection", "features": [
    {"type": "Feature", "properties": {"id": "a", "value": 1},
     "geometry": {"type": "Polygon", "coordinates": [[[0,0],[10,10],[10,0],[0,10],[0,0]]]}}]})";
  EXPECT_THROW(read_regions_geojson(bowtie), GeometryError);
}
