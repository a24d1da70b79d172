#include "cartogram/render.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cartogram {

namespace {

constexpr double kInsideSlack = 1e-14;
constexpr double kJoin = 1e-9;

Vec3 slerp(const Vec3& p, const Vec3& q, double tau) {
  const double angle = angular_distance(p, q);
  if (angle < 1e-15) return p;
  const double s = std::sin(angle);
  return nzd((std::sin((1.0 - tau) * angle) / s) * p + (std::sin(tau * angle) / s) * q);
}

double shortest_edge(const Mesh& mesh) {
  double best = kPi;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      best = std::min(best, angular_distance(mesh.vertices[t[k]], mesh.vertices[t[(k + 1) % 3]]));
    }
  }
  return best;
}

// Walks polylines across the mesh, reusing the adjacency between lines.
class Tracer {
 public:
  explicit Tracer(const Mesh& mesh) : mesh_(mesh), neighbors_(triangle_adjacency(mesh.triangles)) {}

  TracedLine trace(std::span<const Vec3> points, bool closed, double max_arc) const {
    TracedLine out;
    out.closed = closed;
    if (points.empty()) return out;
    if (!(max_arc > 0.0)) throw ConfigError("densification length must be positive");

    std::vector<Vec3> dense{points[0]};
    const std::size_t n = points.size();
    const std::size_t edges = closed ? n : n - 1;
    for (std::size_t i = 0; i < edges; ++i) {
      const Vec3& p = points[i];
      const Vec3& q = points[(i + 1) % n];
      const int pieces = std::max(1, static_cast<int>(std::ceil(angular_distance(p, q) / max_arc)));
      for (int k = 1; k < pieces; ++k) dense.push_back(slerp(p, q, double(k) / pieces));
      dense.push_back(q);
    }

    std::size_t t = locate(dense[0]);
    Vec3 p = dense[0];
    out.points.push_back(p);
    const std::size_t guard = 4 * mesh_.triangles.size() + 16;
    for (std::size_t i = 1; i < dense.size(); ++i) {
      const Vec3& q = dense[i];
      for (std::size_t walked = 0;; ++walked) {
        if (contains(t, q)) {
          push(out, t, q);
          p = q;
          break;
        }
        const auto& tri = mesh_.triangles[t];
        int exit_edge = -1;
        double exit_tau = kInfinity;
        for (int k = 0; k < 3; ++k) {
          const Vec3 normal = mesh_.vertices[tri[k]].cross(mesh_.vertices[tri[(k + 1) % 3]]);
          const double nq = normal.dot(q);
          if (nq >= -kInsideSlack) continue;
          const double np = std::max(normal.dot(p), 0.0);
          const double tau = np / (np - nq);
          if (tau < exit_tau) {
            exit_tau = tau;
            exit_edge = k;
          }
        }
        if (exit_edge < 0 || neighbors_[t][exit_edge] < 0 || walked > guard) {
          // Degenerate walk (through a vertex, say): jump straight to q's
          // triangle and accept one segment that skips the edge split.
          t = locate(q);
          push(out, t, q);
          p = q;
          break;
        }
        const Vec3 x = nzd((1.0 - exit_tau) * p + exit_tau * q);
        if ((x - p).norm() > 1e-15) {
          push(out, t, x);
          p = x;
        }
        t = static_cast<std::size_t>(neighbors_[t][exit_edge]);
      }
    }
    return out;
  }

 private:
  bool contains(std::size_t t, const Vec3& p) const {
    const auto& tri = mesh_.triangles[t];
    const Vec3& a = mesh_.vertices[tri[0]];
    const Vec3& b = mesh_.vertices[tri[1]];
    const Vec3& c = mesh_.vertices[tri[2]];
    return p.dot(a + b + c) > 0.0 && a.cross(b).dot(p) >= -kInsideSlack &&
           b.cross(c).dot(p) >= -kInsideSlack && c.cross(a).dot(p) >= -kInsideSlack;
  }

  std::size_t locate(const Vec3& p) const {
    for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
      if (contains(t, p)) return t;
    }
    throw GeometryError("border point lies in no mesh triangle");
  }

  void push(TracedLine& line, std::size_t t, const Vec3& q) const {
    const auto& tri = mesh_.triangles[t];
    const Vec3& a = mesh_.vertices[tri[0]];
    const Vec3& b = mesh_.vertices[tri[1]];
    const Vec3& c = mesh_.vertices[tri[2]];
    line.segment_triangle.push_back(t);
    line.segment_barycentric.push_back(
        {radial_barycentric(line.points.back(), a, b, c), radial_barycentric(q, a, b, c)});
    line.points.push_back(q);
  }

  const Mesh& mesh_;
  std::vector<std::array<std::int64_t, 3>> neighbors_;
};

// Longitude of a mapped point; points exactly on the interruption take the
// side of `hint`.
LonLat output_lonlat(const Vec3& p, double hint) {
  LonLat ll = point_to_lonlat(p);
  if (p.y() == 0.0 && p.x() < 0.0) ll.lon = hint < 0.0 ? -kPi : kPi;
  return ll;
}

void append_segment(std::vector<std::vector<Vec2>>& pieces, const Vec2& start, const Vec2& end,
                    bool& cut) {
  if (pieces.empty() || (pieces.back().back() - start).norm() > kJoin) {
    if (!pieces.empty()) cut = true;
    pieces.push_back({start});
  }
  pieces.back().push_back(end);
}

void require_finite(const Vec2& p) {
  if (!p.allFinite()) throw NumericError("refusing to emit non-finite coordinates");
}

std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

Vec3 radial_barycentric(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  Mat3 m;
  m.col(0) = a;
  m.col(1) = b;
  m.col(2) = c;
  const Vec3 lam = m.partialPivLu().solve(p);
  const double total = lam.sum();
  if (!(std::abs(total) > kTolerance)) throw GeometryError("point is parallel to triangle plane");
  return lam / total;
}

TracedLine trace_polyline(const Mesh& mesh, std::span<const Vec3> points, bool closed,
                          double max_arc) {
  return Tracer(mesh).trace(points, closed, max_arc);
}

std::vector<TracedRegion> trace_regions(const Mesh& mesh, const RegionSet& regions) {
  const Tracer tracer(mesh);
  const double max_arc = 0.25 * shortest_edge(mesh);
  std::vector<TracedRegion> out;
  for (const auto& r : regions.regions) {
    TracedRegion tr;
    tr.id = r.id;
    for (const auto& poly : r.polygons) {
      TracedPolygon tp;
      tp.rings.push_back(tracer.trace(poly.outer, true, max_arc));
      for (const auto& h : poly.holes) tp.rings.push_back(tracer.trace(h, true, max_arc));
      tr.polygons.push_back(std::move(tp));
    }
    out.push_back(std::move(tr));
  }
  return out;
}

std::vector<TracedLine> trace_graticule(const Mesh& mesh, double interruption_lon_deg,
                                        double step_deg) {
  if (!(step_deg > 0.0)) throw ConfigError("graticule step must be positive");
  const Tracer tracer(mesh);
  const double max_arc = 0.25 * shortest_edge(mesh);
  const double rotation = map_frame_rotation(interruption_lon_deg);
  auto point = [&](double lon, double lat) {
    return rotate_z(lonlat_to_point({deg_to_rad(lon), deg_to_rad(lat)}), rotation);
  };
  std::vector<TracedLine> out;
  for (double lon = -180.0; lon < 180.0 - 1e-9; lon += step_deg) {
    std::vector<Vec3> line;
    for (double lat = -88.0; lat <= 88.0 + 1e-9; lat += 2.0) line.push_back(point(lon, lat));
    out.push_back(tracer.trace(line, false, max_arc));
  }
  for (double lat = -90.0 + step_deg; lat < 90.0 - 1e-9; lat += step_deg) {
    std::vector<Vec3> ring;
    for (double lon = -180.0; lon < 180.0 - 1e-9; lon += 2.0) ring.push_back(point(lon, lat));
    out.push_back(tracer.trace(ring, true, max_arc));
  }
  return out;
}

std::vector<std::vector<Vec2>> map_line(const TracedLine& line, const MapFrame& frame,
                                        bool* was_cut) {
  std::vector<std::vector<Vec2>> pieces;
  bool cut = false;
  const bool sphere = frame.mode != Mode::plane;
  if (sphere && !frame.projection) throw ConfigError("sphere output needs a projection");
  for (std::size_t i = 0; i < line.segment_triangle.size(); ++i) {
    const Triangle& tri = frame.triangles.at(line.segment_triangle[i]);
    const auto& [lam_p, lam_q] = line.segment_barycentric[i];
    if (!sphere) {
      auto map2 = [&](const Vec3& lam) {
        Vec2 out = Vec2::Zero();
        for (int k = 0; k < 3; ++k) out += lam[k] * frame.state.segment<2>(2 * tri[k]);
        return out;
      };
      append_segment(pieces, map2(lam_p), map2(lam_q), cut);
      continue;
    }
    auto map3 = [&](const Vec3& lam) {
      Vec3 sum = Vec3::Zero();
      for (int k = 0; k < 3; ++k) sum += lam[k] * frame.state.segment<3>(3 * tri[k]);
      return nzd(sum);
    };
    const Vec3 a = map3(lam_p);
    const Vec3 b = map3(lam_q);
    const auto& proj = *frame.projection;
    if (a.y() * b.y() < 0.0) {
      const double tau = a.y() / (a.y() - b.y());
      const Vec3 c = (1.0 - tau) * a + tau * b;
      if (c.x() < 0.0) {
        Vec3 crossing = nzd(c);
        crossing.y() = 0.0;
        append_segment(pieces, proj.forward(output_lonlat(a, b.y())),
                       proj.forward(output_lonlat(crossing, a.y())), cut);
        pieces.push_back({proj.forward(output_lonlat(crossing, b.y())),
                          proj.forward(output_lonlat(b, a.y()))});
        cut = true;
        continue;
      }
    }
    append_segment(pieces, proj.forward(output_lonlat(a, b.y())),
                   proj.forward(output_lonlat(b, a.y())), cut);
  }
  if (line.closed && !pieces.empty()) {
    if (!cut) {
      pieces.front().back() = pieces.front().front();
    } else if (pieces.size() > 1 && (pieces.back().back() - pieces.front().front()).norm() <= kJoin) {
      auto& last = pieces.back();
      last.insert(last.end(), pieces.front().begin() + 1, pieces.front().end());
      pieces.front() = std::move(last);
      pieces.pop_back();
    }
  }
  if (was_cut) *was_cut = cut;
  return pieces;
}

MappedBorders map_borders(const std::vector<TracedRegion>& regions, const MapFrame& frame) {
  MappedBorders out;
  out.mode = frame.mode;
  if (frame.mode != Mode::plane && frame.projection) out.projection = frame.projection->name();
  for (const auto& r : regions) {
    MappedRegion mr;
    mr.id = r.id;
    for (const auto& poly : r.polygons) {
      std::vector<std::vector<Vec2>> rings;
      for (const auto& ring : poly.rings) {
        bool cut = false;
        auto pieces = map_line(ring, frame, &cut);
        if (!cut && pieces.size() == 1) {
          rings.push_back(std::move(pieces.front()));
        } else {
          for (auto& p : pieces) mr.open_lines.push_back(std::move(p));
        }
      }
      if (!rings.empty()) mr.polygons.push_back(std::move(rings));
    }
    out.regions.push_back(std::move(mr));
  }
  return out;
}

std::vector<std::array<Vec2, 2>> map_mesh_edges(const MapFrame& frame) {
  std::vector<std::array<Vec2, 2>> out;
  const bool sphere = frame.mode != Mode::plane;
  if (sphere && !frame.projection) throw ConfigError("sphere output needs a projection");
  for (const auto& tri : frame.triangles) {
    for (int k = 0; k < 3; ++k) {
      const VertexIndex i = tri[k];
      const VertexIndex j = tri[(k + 1) % 3];
      if (i > j) continue;  // each interior edge once
      if (!sphere) {
        out.push_back({frame.state.segment<2>(2 * i), frame.state.segment<2>(2 * j)});
        continue;
      }
      const Vec3 a = frame.state.segment<3>(3 * i);
      const Vec3 b = frame.state.segment<3>(3 * j);
      if (a.y() * b.y() <= 0.0 && (a.x() < 0.0 || b.x() < 0.0)) continue;
      out.push_back({frame.projection->forward(point_to_lonlat(a)),
                     frame.projection->forward(point_to_lonlat(b))});
    }
  }
  return out;
}

std::string emit_geojson(const MappedBorders& borders) {
  using nlohmann::json;
  auto coords = [](const std::vector<Vec2>& line) {
    json arr = json::array();
    for (const auto& p : line) {
      require_finite(p);
      arr.push_back({p.x(), p.y()});
    }
    return arr;
  };
  json features = json::array();
  for (const auto& r : borders.regions) {
    json geometry;
    if (r.open_lines.empty()) {
      json polys = json::array();
      for (const auto& poly : r.polygons) {
        json rings = json::array();
        for (const auto& ring : poly) rings.push_back(coords(ring));
        polys.push_back(std::move(rings));
      }
      geometry = {{"type", "MultiPolygon"}, {"coordinates", std::move(polys)}};
    } else {
      json lines = json::array();
      for (const auto& poly : r.polygons) {
        for (const auto& ring : poly) lines.push_back(coords(ring));
      }
      for (const auto& line : r.open_lines) lines.push_back(coords(line));
      geometry = {{"type", "MultiLineString"}, {"coordinates", std::move(lines)}};
    }
    features.push_back({{"type", "Feature"},
                        {"properties", {{"id", r.id}}},
                        {"geometry", std::move(geometry)}});
  }
  json doc = {{"type", "FeatureCollection"},
              {"planar", true},
              {"mode", std::string(mode_name(borders.mode))},
              {"features", std::move(features)}};
  if (!borders.projection.empty()) doc["projection"] = borders.projection;
  return doc.dump() + "\n";
}

std::string emit_svg(const MappedBorders& borders, const SvgOptions& options,
                     const std::vector<std::array<Vec2, 2>>& mesh_edges,
                     const std::vector<std::vector<Vec2>>& graticule) {
  Eigen::AlignedBox2d box;
  auto grow = [&](const Vec2& p) {
    require_finite(p);
    box.extend(p);
  };
  for (const auto& r : borders.regions) {
    for (const auto& poly : r.polygons) {
      for (const auto& ring : poly) std::for_each(ring.begin(), ring.end(), grow);
    }
    for (const auto& line : r.open_lines) std::for_each(line.begin(), line.end(), grow);
  }
  if (options.mesh) {
    for (const auto& e : mesh_edges) {
      grow(e[0]);
      grow(e[1]);
    }
  }
  if (options.graticule) {
    for (const auto& line : graticule) std::for_each(line.begin(), line.end(), grow);
  }
  if (box.isEmpty()) box = Eigen::AlignedBox2d(Vec2(-1.0, -1.0), Vec2(1.0, 1.0));

  const double margin = 10.0;
  const double extent = std::max(box.sizes().x(), 1e-12);
  const double scale = options.width / extent;
  const double height = box.sizes().y() * scale;
  auto fmt = [&](const Vec2& p) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << margin + (p.x() - box.min().x()) * scale << ' '
       << margin + (box.max().y() - p.y()) * scale;
    return os.str();
  };
  auto path_data = [&](const std::vector<Vec2>& line, bool close) {
    std::string d;
    for (std::size_t i = 0; i < line.size(); ++i) d += (i ? " L" : "M") + fmt(line[i]);
    if (close) d += " Z";
    return d;
  };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<!-- y axis flipped: map north is up -->\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
      << std::fixed << std::setprecision(3) << options.width + 2 * margin << "\" height=\""
      << height + 2 * margin << "\">\n";
  if (options.graticule) {
    std::string d;
    for (const auto& line : graticule) d += path_data(line, false) + " ";
    svg << "<g id=\"graticule\"><path d=\"" << d
        << "\" fill=\"none\" stroke=\"#bbbbbb\" stroke-width=\"0.5\"/></g>\n";
  }
  svg << "<g id=\"regions\">\n";
  for (const auto& r : borders.regions) {
    std::string d;
    for (const auto& poly : r.polygons) {
      for (const auto& ring : poly) d += path_data(ring, true) + " ";
    }
    for (const auto& line : r.open_lines) d += path_data(line, false) + " ";
    std::string id;
    for (char c : r.id) {
      id += (c == '"' || c == '<' || c == '>' || c == '&') ? '_' : c;
    }
    svg << "<path id=\"region-" << id << "\" d=\"" << d
        << "\" fill=\"#d9c7a3\" fill-rule=\"evenodd\" stroke=\"#333333\" stroke-width=\"0.7\"/>\n";
  }
  svg << "</g>\n";
  if (options.mesh) {
    std::string d;
    for (const auto& e : mesh_edges) d += "M" + fmt(e[0]) + " L" + fmt(e[1]) + " ";
    svg << "<g id=\"mesh\"><path d=\"" << d
        << "\" fill=\"none\" stroke=\"#4a78b5\" stroke-width=\"0.3\"/></g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

double ring_area(std::span<const Vec2> ring) {
  double twice = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = ring[i];
    const Vec2& q = ring[(i + 1) % n];
    twice += p.x() * q.y() - p.y() * q.x();
  }
  return 0.5 * twice;
}

ErrorReport error_report(const SolveResult& result, const RegionSet& regions) {
  ErrorReport report;
  report.stages = result.stages;
  const std::size_t n = result.populations.size();
  if (regions.size() != n || result.region_areas.size() != n) {
    throw ConfigError("result and region set disagree on the number of regions");
  }
  std::vector<double> magnitudes;
  for (std::size_t i = 0; i < n; ++i) {
    RegionErrorRow row;
    row.id = regions.regions[i].id;
    row.population = result.populations[i];
    row.area = result.region_areas[i];
    row.rel_error = (row.area - row.population) / row.population;
    magnitudes.push_back(std::abs(row.rel_error));
    report.regions.push_back(std::move(row));
  }
  report.median_abs_rel_error = median(magnitudes);
  report.max_abs_rel_error =
      magnitudes.empty() ? 0.0 : *std::max_element(magnitudes.begin(), magnitudes.end());
  return report;
}

std::string report_csv(const ErrorReport& report) {
  std::string out = "region_id,population,area,rel_error\n";
  for (const auto& r : report.regions) {
    out += r.id + "," + format_number(r.population) + "," + format_number(r.area) + "," +
           format_number(r.rel_error) + "\n";
  }
  return out;
}

std::string stages_csv(const ErrorReport& report) {
  std::string out =
      "stage,error_weight,distortion_weight,gamma,steps,converged,median_rel_error,max_rel_error\n";
  for (const auto& s : report.stages) {
    out += std::to_string(s.index) + "," + format_number(s.error_weight) + "," +
           format_number(s.distortion_weight) + "," + format_number(s.gamma) + "," +
           std::to_string(s.steps) + "," + (s.converged ? "1" : "0") + "," +
           format_number(s.median_rel_error) + "," + format_number(s.max_rel_error) + "\n";
  }
  return out;
}

std::string timings_csv(const std::vector<StageStats>& stages) {
  std::string out = "stage,steps,seconds\n";
  for (const auto& s : stages) {
    out += std::to_string(s.index) + "," + std::to_string(s.steps) + "," +
           format_number(s.seconds) + "\n";
  }
  return out;
}

}  // namespace cartogram
