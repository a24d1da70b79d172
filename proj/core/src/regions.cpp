#include "cartogram/regions.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

namespace cartogram {

namespace {

struct Cap {
  Vec3 center = Vec3::UnitZ();
  double radius = kPi;

  bool overlaps(const Cap& other) const {
    if (radius >= kPi || other.radius >= kPi) return true;
    return angular_distance(center, other.center) <= radius + other.radius + 1e-9;
  }
};

Cap bounding_cap(std::span<const Vec3> pts) {
  Vec3 sum = Vec3::Zero();
  for (const auto& p : pts) sum += p;
  Cap cap;
  if (sum.norm() <= kTolerance) return cap;
  cap.center = sum.normalized();
  double r = 0.0;
  for (const auto& p : pts) r = std::max(r, angular_distance(cap.center, p));
  // Caps wider than a hemisphere are not convex, so arcs may leave them.
  cap.radius = r < 0.5 * kPi ? r : kPi;
  return cap;
}

// Sutherland-Hodgman against the hemisphere {p : p.normal > 0}. Vertices
// within rounding of the boundary circle count as outside. Each run along
// the circle from an exit point to the next entry point is the minor arc,
// except that a half-circle run is pinned by its midpoint, taken
// anticlockwise about the normal so the kept side stays on the left.
std::vector<Vec3> clip_hemisphere(const std::vector<Vec3>& poly, const Vec3& raw_normal) {
  std::vector<Vec3> out;
  if (poly.empty()) return out;
  const Vec3 normal = raw_normal.normalized();
  constexpr double on_circle = 1e-13;
  std::vector<std::pair<Vec3, bool>> kept;  // point, is exit point
  kept.reserve(poly.size() + 4);
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& p = poly[(i + n - 1) % n];
    const Vec3& q = poly[i];
    const double sp = p.dot(normal);
    const double sq = q.dot(normal);
    const bool p_in = sp > on_circle;
    const bool q_in = sq > on_circle;
    if (p_in != q_in) {
      // Point of the minor arc p->q on the clip circle.
      Vec3 x = sp * q - sq * p;
      if (!p_in) x = -x;
      const double norm = x.norm();
      if (norm > 0.0) kept.emplace_back(x / norm, p_in);
    }
    if (q_in) kept.emplace_back(q, false);
  }

  out.reserve(kept.size() + 2);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    out.push_back(kept[i].first);
    if (!kept[i].second) continue;
    const Vec3& exit = kept[i].first;
    const Vec3& entry = kept[(i + 1) % kept.size()].first;
    if (exit.cross(entry).norm() < 1e-9 && exit.dot(entry) < 0.0) {
      out.push_back(normal.cross(exit).normalized());
    }
  }
  return out;
}

}  // namespace

double ring_portion(std::span<const Vec3> ring, const Vec3& a, const Vec3& b, const Vec3& c) {
  std::vector<Vec3> poly(ring.begin(), ring.end());
  poly = clip_hemisphere(poly, a.cross(b));
  poly = clip_hemisphere(poly, b.cross(c));
  poly = clip_hemisphere(poly, c.cross(a));
  if (poly.size() < 3) return 0.0;

  const Vec3 raw_normal = (b - a).cross(c - a);
  const double flat_area = 0.5 * raw_normal.norm();
  if (!(flat_area > 0.0)) throw GeometryError("ring_portion: degenerate triangle");
  const Vec3 normal = raw_normal.normalized();
  const double offset = a.dot(normal);
  const Vec3 e1 = (b - a).normalized();
  const Vec3 e2 = normal.cross(e1);

  // Radial projection onto the triangle's plane turns arcs into segments.
  double twice_area = 0.0;
  Vec2 prev;
  Vec2 first;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec3 on_plane = poly[i] * (offset / poly[i].dot(normal)) - a;
    const Vec2 cur(on_plane.dot(e1), on_plane.dot(e2));
    if (i == 0) {
      first = cur;
    } else {
      twice_area += prev.x() * cur.y() - prev.y() * cur.x();
    }
    prev = cur;
  }
  twice_area += prev.x() * first.y() - prev.y() * first.x();
  return 0.5 * twice_area / flat_area;
}

double PortionTable::portion(std::size_t region, std::size_t triangle) const {
  for (const auto& e : by_triangle.at(triangle)) {
    if (e.region == region) return e.portion;
  }
  return 0.0;
}

void normalize_polygon(SphericalPolygon& polygon) {
  auto orient = [](std::vector<Vec3>& ring, bool anticlockwise) {
    if (ring.size() > 1 && (ring.front() - ring.back()).norm() <= kTolerance) ring.pop_back();
    const double s = signed_polygon_area_unchecked(ring);
    if ((s < 0.0) == anticlockwise) std::reverse(ring.begin(), ring.end());
  };
  orient(polygon.outer, true);
  spherical_polygon_area(polygon.outer);
  for (auto& hole : polygon.holes) {
    orient(hole, false);
    std::vector<Vec3> reversed(hole.rbegin(), hole.rend());
    spherical_polygon_area(reversed);
  }
}

PortionTable compute_portions(const Mesh& mesh, const RegionSet& regions, int threads) {
  struct RingRef {
    std::uint32_t region;
    const std::vector<Vec3>* ring;
    Cap cap;
  };
  std::vector<RingRef> rings;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    for (const auto& poly : regions.regions[r].polygons) {
      const Cap outer_cap = bounding_cap(poly.outer);
      rings.push_back({static_cast<std::uint32_t>(r), &poly.outer, outer_cap});
      for (const auto& hole : poly.holes) {
        rings.push_back({static_cast<std::uint32_t>(r), &hole, outer_cap});
      }
    }
  }

  PortionTable table;
  table.region_count = regions.size();
  table.by_triangle.resize(mesh.triangles.size());
  table.land.assign(mesh.triangles.size(), 0.0);

  detail::parallel_chunks(mesh.triangles.size(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> acc(regions.size(), 0.0);
    std::vector<char> touched(regions.size(), 0);
    for (std::size_t t = begin; t < end; ++t) {
      const auto& tri = mesh.triangles[t];
      const Vec3& a = mesh.vertices[tri[0]];
      const Vec3& b = mesh.vertices[tri[1]];
      const Vec3& c = mesh.vertices[tri[2]];
      const std::array<Vec3, 3> corners{a, b, c};
      const Cap tri_cap = bounding_cap(corners);
      std::vector<std::uint32_t> hit;
      for (const auto& ref : rings) {
        if (!ref.cap.overlaps(tri_cap)) continue;
        const double v = ring_portion(*ref.ring, a, b, c);
        if (!std::isfinite(v)) throw NumericError("portion of triangle " + std::to_string(t) + " is not finite");
        if (v == 0.0) continue;
        if (!touched[ref.region]) {
          touched[ref.region] = 1;
          hit.push_back(ref.region);
        }
        acc[ref.region] += v;
      }
      std::sort(hit.begin(), hit.end());
      double land = 0.0;
      for (auto r : hit) {
        double v = acc[r];
        // Clipping is exact up to whole windings of a triangle edge's great
        // circle, which shift the fraction by an integer.
        while (v > 1.0 + 1e-9) v -= 1.0;
        while (v < -1e-9) v += 1.0;
        v = std::clamp(v, 0.0, 1.0);
        if (v > 1e-14) {
          table.by_triangle[t].push_back({r, v});
          land += v;
        }
        acc[r] = 0.0;
        touched[r] = 0;
      }
      table.land[t] = land;
    }
  });

  for (std::size_t t = 0; t < table.land.size(); ++t) {
    if (table.land[t] > 1.0 + 1e-6) {
      throw GeometryError("regions overlap inside triangle " + std::to_string(t));
    }
  }
  return table;
}

std::vector<double> scale_populations(std::span<const double> values,
                                      std::span<const double> initial_areas) {
  if (values.size() != initial_areas.size()) {
    throw InputError("scale_populations: value and area counts differ");
  }
  double value_sum = 0.0;
  double area_sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0)) throw InputError("region data values must be positive");
    if (!(initial_areas[i] > 0.0)) throw InputError("region initial areas must be positive");
    value_sum += values[i];
    area_sum += initial_areas[i];
  }
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] * area_sum / value_sum;
  return out;
}

std::vector<double> initial_region_areas(const PortionTable& portions,
                                         std::span<const double> triangle_areas) {
  std::vector<double> out(portions.region_count, 0.0);
  for (std::size_t t = 0; t < portions.by_triangle.size(); ++t) {
    for (const auto& e : portions.by_triangle[t]) out[e.region] += e.portion * triangle_areas[t];
  }
  return out;
}

std::vector<double> intended_scales(const PortionTable& portions,
                                    std::span<const double> populations,
                                    std::span<const double> initial_areas,
                                    std::span<const Triangle> triangles,
                                    std::span<const double> triangle_areas) {
  const std::size_t nt = portions.by_triangle.size();
  std::vector<double> scale(nt, 1.0);
  std::vector<char> is_land(nt, 0);
  double land_sum = 0.0;
  std::size_t land_count = 0;
  for (std::size_t t = 0; t < nt; ++t) {
    if (!(portions.land[t] > 0.0)) continue;
    double s = 0.0;
    for (const auto& e : portions.by_triangle[t]) {
      s += e.portion / portions.land[t] * populations[e.region] / initial_areas[e.region];
    }
    scale[t] = s;
    is_land[t] = 1;
    land_sum += s;
    ++land_count;
  }
  if (land_count == 0 || land_count == nt) return scale;

  const double start = land_sum / static_cast<double>(land_count);
  for (std::size_t t = 0; t < nt; ++t) {
    if (!is_land[t]) scale[t] = start;
  }
  const auto neighbors = triangle_adjacency(triangles);
  std::vector<double> next = scale;
  for (int sweep = 0; sweep < 10'000'000; ++sweep) {
    double change = 0.0;
    for (std::size_t t = 0; t < nt; ++t) {
      if (is_land[t]) continue;
      double num = 0.0;
      double den = 0.0;
      for (auto nb : neighbors[t]) {
        if (nb < 0) continue;
        num += triangle_areas[nb] * scale[nb];
        den += triangle_areas[nb];
      }
      if (den > 0.0) next[t] = num / den;
      change = std::max(change, std::abs(next[t] - scale[t]));
    }
    scale.swap(next);
    if (change < 1e-10) break;
  }
  return scale;
}

std::vector<TriangleFrame> initial_frames(const Mesh& mesh) {
  std::vector<TriangleFrame> frames;
  frames.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    frames.push_back(initial_frame(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]));
  }
  return frames;
}

void prepare_regions(RegionSet& regions, const PortionTable& portions,
                     std::span<const TriangleFrame> frames) {
  std::vector<double> areas(frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) areas[t] = frames[t].area;
  const auto mu = initial_region_areas(portions, areas);
  std::vector<double> values;
  for (const auto& r : regions.regions) values.push_back(r.value);
  for (std::size_t r = 0; r < regions.size(); ++r) {
    if (!(mu[r] > 0.0)) {
      throw InputError("region '" + regions.regions[r].id + "' does not cover any of the mesh");
    }
  }
  const auto p = scale_populations(values, mu);
  for (std::size_t r = 0; r < regions.size(); ++r) {
    regions.regions[r].initial_area = mu[r];
    regions.regions[r].population = p[r];
  }
}

std::string portions_to_json(const PortionTable& table, const std::string& mesh_hash,
                             const std::string& regions_hash) {
  nlohmann::json doc;
  doc["mesh_hash"] = mesh_hash;
  doc["regions_hash"] = regions_hash;
  doc["region_count"] = table.region_count;
  nlohmann::json tris = nlohmann::json::array();
  for (const auto& entries : table.by_triangle) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& e : entries) row.push_back({e.region, e.portion});
    tris.push_back(std::move(row));
  }
  doc["triangles"] = std::move(tris);
  return doc.dump();
}

CachedPortions portions_from_json(const std::string& text) {
  CachedPortions out;
  try {
    const auto doc = nlohmann::json::parse(text);
    out.mesh_hash = doc.at("mesh_hash").get<std::string>();
    out.regions_hash = doc.at("regions_hash").get<std::string>();
    out.table.region_count = doc.at("region_count").get<std::size_t>();
    for (const auto& row : doc.at("triangles")) {
      std::vector<PortionEntry> entries;
      double land = 0.0;
      for (const auto& e : row) {
        entries.push_back({e.at(0).get<std::uint32_t>(), e.at(1).get<double>()});
        land += entries.back().portion;
      }
      out.table.by_triangle.push_back(std::move(entries));
      out.table.land.push_back(land);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed portion cache: ") + e.what());
  }
  return out;
}

std::vector<bool> mark_for_subdivision(const Mesh& mesh, const PortionTable& portions,
                                       std::span<const double> scales,
                                       const SubdivisionRules& rules, bool first_pass) {
  const std::size_t nt = mesh.triangles.size();
  std::vector<bool> marked(nt, false);
  const auto areas = flat_triangle_areas(mesh);

  std::vector<int> cover(portions.region_count, 0);
  for (const auto& entries : portions.by_triangle) {
    for (const auto& e : entries) ++cover[e.region];
  }
  const double cap_z = std::sin(rules.polar_cap_lat);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& entries = portions.by_triangle[t];
    for (const auto& e : entries) {
      if (cover[e.region] < rules.min_triangles_per_region) marked[t] = true;
    }
    if (scales[t] * areas[t] > rules.max_scaled_area) marked[t] = true;
    if (!first_pass) continue;
    if (rules.split_borders_once && entries.size() >= 2) marked[t] = true;
    if (rules.split_polar_cap_once) {
      for (auto v : mesh.triangles[t]) {
        if (mesh.vertices[v].z() > cap_z) marked[t] = true;
      }
    }
  }
  return marked;
}

Refinement subdivide(const Mesh& mesh, const PortionTable& portions,
                     std::span<const double> scales, const SubdivisionRules& rules,
                     bool first_pass) {
  return refine(mesh, mark_for_subdivision(mesh, portions, scales, rules, first_pass));
}

Mesh subdivide_until_satisfied(const Mesh& mesh, const RegionSet& regions,
                               const SubdivisionRules& rules, int threads) {
  Mesh current = mesh;
  for (int depth = 0; depth <= rules.max_depth; ++depth) {
    RegionSet work = regions;
    const auto portions = compute_portions(current, work, threads);
    const auto frames = initial_frames(current);
    prepare_regions(work, portions, frames);
    std::vector<double> pop, mu, areas;
    for (const auto& r : work.regions) {
      pop.push_back(r.population);
      mu.push_back(r.initial_area);
    }
    for (const auto& f : frames) areas.push_back(f.area);
    const auto scales = intended_scales(portions, pop, mu, current.triangles, areas);
    const auto marks = mark_for_subdivision(current, portions, scales, rules, depth == 0);
    if (std::none_of(marks.begin(), marks.end(), [](bool b) { return b; })) return current;
    if (depth == rules.max_depth) break;
    current = refine(current, marks).mesh;
  }
  throw NumericError("subdivision rules still unsatisfied after the maximum depth");
}

}  // namespace cartogram
