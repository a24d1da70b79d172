#include "cartogram/mesh.hpp"

#include <nlohmann/json.hpp>

namespace cartogram {

using nlohmann::json;

std::string mesh_to_json(const Mesh& mesh) {
  json doc;
  json verts = json::array();
  for (const auto& v : mesh.vertices) verts.push_back({v.x(), v.y(), v.z()});
  json tris = json::array();
  for (const auto& t : mesh.triangles) tris.push_back({t[0], t[1], t[2]});
  doc["vertices"] = std::move(verts);
  doc["triangles"] = std::move(tris);
  if (mesh.north_pole) doc["north_pole"] = *mesh.north_pole;
  if (mesh.south_pole) doc["south_pole"] = *mesh.south_pole;
  doc["antimeridian"] = mesh.antimeridian;
  return doc.dump();
}

Mesh mesh_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("mesh file is not valid JSON: ") + e.what());
  }
  if (!doc.contains("vertices") || !doc.contains("triangles")) {
    throw InputError("mesh file needs \"vertices\" and \"triangles\"");
  }
  Mesh mesh;
  try {
    for (const auto& v : doc.at("vertices")) {
      if (v.size() != 3) throw InputError("mesh vertices must have three coordinates");
      mesh.vertices.emplace_back(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
    }
    for (const auto& t : doc.at("triangles")) {
      if (t.size() != 3) throw InputError("mesh triangles must have three indices");
      Triangle tri{t[0].get<VertexIndex>(), t[1].get<VertexIndex>(), t[2].get<VertexIndex>()};
      for (auto idx : tri) {
        if (idx >= mesh.vertices.size()) throw InputError("mesh triangle index out of range");
      }
      mesh.triangles.push_back(tri);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed mesh file: ") + e.what());
  }
  tag_vertices(mesh);
  return mesh;
}

}  // namespace cartogram
