#include "cartogram/mesh.hpp"

#include "cartogram/projections.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace cartogram {

namespace {

struct LatticeKey {
  int x, y, z;
  bool operator<(const LatticeKey& o) const {
    return std::tie(x, y, z) < std::tie(o.x, o.y, o.z);
  }
};

double orientation(const Vec3& a, const Vec3& b, const Vec3& c) {
  return (b - a).cross(c - a).dot(a + b + c);
}

std::uint64_t edge_key(VertexIndex a, VertexIndex b) {
  const auto lo = std::min(a, b);
  const auto hi = std::max(a, b);
  return (static_cast<std::uint64_t>(lo) << 32) | hi;
}

}  // namespace

Mesh build_octahedral_mesh(int frequency) {
  if (frequency < 1) throw ConfigError("mesh frequency must be at least 1");
  const int n = frequency;
  Mesh mesh;
  std::map<LatticeKey, VertexIndex> index_of;

  auto vertex = [&](int x, int y, int z) -> VertexIndex {
    const LatticeKey key{x, y, z};
    auto it = index_of.find(key);
    if (it != index_of.end()) return it->second;
    const auto idx = static_cast<VertexIndex>(mesh.vertices.size());
    mesh.vertices.push_back(nzd(Vec3(x, y, z)));
    index_of.emplace(key, idx);
    return idx;
  };

  for (int sz : {1, -1}) {
    for (int sy : {1, -1}) {
      for (int sx : {1, -1}) {
        // Face spanned by (sx n,0,0), (0,sy n,0), (0,0,sz n); grid point
        // (a, b) sits at (sx (n-a-b), sy a, sz b).
        auto grid = [&](int a, int b) { return vertex(sx * (n - a - b), sy * a, sz * b); };
        auto emit = [&](VertexIndex p, VertexIndex q, VertexIndex r) {
          const auto& v = mesh.vertices;
          if (orientation(v[p], v[q], v[r]) > 0.0) {
            mesh.triangles.push_back({p, q, r});
          } else {
            mesh.triangles.push_back({p, r, q});
          }
        };
        for (int b = 0; b < n; ++b) {
          for (int a = 0; a + b < n; ++a) {
            emit(grid(a, b), grid(a + 1, b), grid(a, b + 1));
            if (a + b + 2 <= n) emit(grid(a + 1, b), grid(a + 1, b + 1), grid(a, b + 1));
          }
        }
      }
    }
  }
  tag_vertices(mesh);
  return mesh;
}

void tag_vertices(Mesh& mesh) {
  mesh.north_pole.reset();
  mesh.south_pole.reset();
  mesh.antimeridian.clear();
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& v = mesh.vertices[i];
    const auto idx = static_cast<VertexIndex>(i);
    if (v.x() == 0.0 && v.y() == 0.0) {
      if (v.z() > 0.0) mesh.north_pole = idx;
      if (v.z() < 0.0) mesh.south_pole = idx;
    } else if (v.y() == 0.0 && v.x() < 0.0) {
      mesh.antimeridian.push_back(idx);
    }
  }
}

std::vector<double> spherical_triangle_areas(const Mesh& mesh) {
  std::vector<double> out;
  out.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    out.push_back(spherical_triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]],
                                          mesh.vertices[t[2]]));
  }
  return out;
}

std::vector<double> flat_triangle_areas(const Mesh& mesh) {
  std::vector<double> out;
  out.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    out.push_back(0.5 * (mesh.vertices[t[1]] - a).cross(mesh.vertices[t[2]] - a).norm());
  }
  return out;
}

std::vector<std::array<std::int64_t, 3>> triangle_adjacency(std::span<const Triangle> triangles) {
  std::unordered_map<std::uint64_t, std::vector<std::pair<std::size_t, int>>> edges;
  edges.reserve(triangles.size() * 2);
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      edges[edge_key(triangles[t][k], triangles[t][(k + 1) % 3])].emplace_back(t, k);
    }
  }
  std::vector<std::array<std::int64_t, 3>> out(triangles.size(), {-1, -1, -1});
  for (const auto& [key, users] : edges) {
    if (users.size() != 2) continue;
    out[users[0].first][users[0].second] = static_cast<std::int64_t>(users[1].first);
    out[users[1].first][users[1].second] = static_cast<std::int64_t>(users[0].first);
  }
  return out;
}

Refinement refine(const Mesh& mesh, const std::vector<bool>& marked) {
  if (marked.size() != mesh.triangles.size()) {
    throw ConfigError("refine: mark vector does not match triangle count");
  }
  const std::size_t nt = mesh.triangles.size();
  std::unordered_set<std::uint64_t> split;
  std::vector<char> red(nt, 0);

  auto mark_edges = [&](std::size_t t) {
    for (int k = 0; k < 3; ++k) {
      split.insert(edge_key(mesh.triangles[t][k], mesh.triangles[t][(k + 1) % 3]));
    }
  };
  for (std::size_t t = 0; t < nt; ++t) {
    if (marked[t]) {
      red[t] = 1;
      mark_edges(t);
    }
  }
  auto split_count = [&](std::size_t t) {
    int count = 0;
    for (int k = 0; k < 3; ++k) {
      count += split.count(edge_key(mesh.triangles[t][k], mesh.triangles[t][(k + 1) % 3])) ? 1 : 0;
    }
    return count;
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t t = 0; t < nt; ++t) {
      if (!red[t] && split_count(t) >= 2) {
        red[t] = 1;
        mark_edges(t);
        changed = true;
      }
    }
  }

  Refinement out;
  out.mesh.vertices = mesh.vertices;
  // Midpoints are numbered in triangle order so the output is deterministic.
  std::unordered_map<std::uint64_t, VertexIndex> midpoint;
  auto mid = [&](VertexIndex a, VertexIndex b) -> VertexIndex {
    const auto key = edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const auto idx = static_cast<VertexIndex>(out.mesh.vertices.size());
    out.mesh.vertices.push_back(nzd(mesh.vertices[a] + mesh.vertices[b]));
    out.new_vertex_edges.push_back({std::min(a, b), std::max(a, b)});
    midpoint.emplace(key, idx);
    return idx;
  };

  for (std::size_t t = 0; t < nt; ++t) {
    const auto [a, b, c] = mesh.triangles[t];
    auto push = [&](VertexIndex p, VertexIndex q, VertexIndex r) {
      out.mesh.triangles.push_back({p, q, r});
      out.parent_triangle.push_back(t);
    };
    if (red[t]) {
      const auto ab = mid(a, b);
      const auto bc = mid(b, c);
      const auto ca = mid(c, a);
      push(a, ab, ca);
      push(ab, b, bc);
      push(ca, bc, c);
      push(ab, bc, ca);
      continue;
    }
    const Triangle& tri = mesh.triangles[t];
    int split_edge = -1;
    for (int k = 0; k < 3; ++k) {
      if (split.count(edge_key(tri[k], tri[(k + 1) % 3]))) split_edge = k;
    }
    if (split_edge < 0) {
      push(a, b, c);
      continue;
    }
    const VertexIndex p = tri[split_edge];
    const VertexIndex q = tri[(split_edge + 1) % 3];
    const VertexIndex r = tri[(split_edge + 2) % 3];
    const auto m = mid(p, q);
    push(p, m, r);
    push(m, q, r);
  }
  tag_vertices(out.mesh);
  return out;
}

PlaneLayout project_initial_to_plane(const Mesh& mesh, const TargetProjection& projection) {
  if (!projection.interrupts_antimeridian()) {
    throw ConfigError("plane layout needs a projection interrupted along the antimeridian");
  }
  if (!mesh.north_pole || !mesh.south_pole) {
    throw ConfigError("plane layout needs a mesh with vertices at both poles");
  }
  PlaneLayout layout;
  const std::size_t nv = mesh.vertices.size();
  layout.initial = mesh.vertices;
  layout.source_vertex.resize(nv);
  for (std::size_t i = 0; i < nv; ++i) layout.source_vertex[i] = static_cast<VertexIndex>(i);

  std::vector<std::int64_t> west_copy(nv, -1);
  std::vector<char> on_antimeridian(nv, 0);
  for (auto v : mesh.antimeridian) on_antimeridian[v] = 1;
  for (auto v : mesh.antimeridian) {
    const auto copy = static_cast<VertexIndex>(layout.initial.size());
    west_copy[v] = copy;
    layout.initial.push_back(mesh.vertices[v]);
    layout.source_vertex.push_back(v);
    layout.duplicated_pairs.push_back({v, copy});
  }

  layout.triangles = mesh.triangles;
  for (auto& tri : layout.triangles) {
    double y_sum = 0.0;
    for (auto v : tri) y_sum += mesh.vertices[v].y();
    if (y_sum >= 0.0) continue;
    for (auto& v : tri) {
      if (on_antimeridian[v]) v = static_cast<VertexIndex>(west_copy[v]);
    }
  }

  layout.positions.resize(layout.initial.size());
  for (std::size_t i = 0; i < layout.initial.size(); ++i) {
    LonLat ll = point_to_lonlat(layout.initial[i]);
    const VertexIndex src = layout.source_vertex[i];
    if (on_antimeridian[src]) ll.lon = (i == src) ? kPi : -kPi;
    layout.positions[i] = projection.forward(ll);
  }

  layout.quadrants.north_pole = *mesh.north_pole;
  layout.quadrants.south_pole = *mesh.south_pole;
  for (const auto& [east, west] : layout.duplicated_pairs) {
    const bool upper = mesh.vertices[east].z() >= 0.0;
    layout.quadrants.sets[upper ? 0 : 3].push_back(east);
    layout.quadrants.sets[upper ? 1 : 2].push_back(west);
  }
  return layout;
}

}  // namespace cartogram
