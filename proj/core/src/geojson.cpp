#include "cartogram/regions.hpp"

#include <map>

#include <nlohmann/json.hpp>

namespace cartogram {

namespace {

using nlohmann::json;

std::vector<Vec3> read_ring(const json& coords, double rotation) {
  if (!coords.is_array()) throw InputError("GeoJSON ring must be an array of positions");
  std::vector<Vec3> ring;
  ring.reserve(coords.size());
  for (const auto& pos : coords) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
      throw InputError("GeoJSON position must be [lon, lat]");
    }
    const double lon = pos[0].get<double>();
    const double lat = pos[1].get<double>();
    if (lat < -90.0 || lat > 90.0) throw InputError("GeoJSON latitude out of range");
    const Vec3 p = rotate_z(lonlat_to_point({deg_to_rad(lon), deg_to_rad(lat)}), rotation);
    if (!ring.empty() && (ring.back() - p).norm() <= kTolerance) continue;
    ring.push_back(p);
  }
  if (ring.size() > 1 && (ring.front() - ring.back()).norm() <= kTolerance) ring.pop_back();
  return ring;
}

SphericalPolygon read_polygon(const json& rings, double rotation) {
  if (!rings.is_array() || rings.empty()) throw InputError("GeoJSON polygon has no rings");
  SphericalPolygon poly;
  poly.outer = read_ring(rings[0], rotation);
  for (std::size_t i = 1; i < rings.size(); ++i) poly.holes.push_back(read_ring(rings[i], rotation));
  normalize_polygon(poly);
  return poly;
}

}  // namespace

double map_frame_rotation(double interruption_lon_deg) {
  return -deg_to_rad(interruption_lon_deg + 180.0);
}

RegionSet read_regions_geojson(const std::string& text, double interruption_lon_deg) {
  const double rotation = map_frame_rotation(interruption_lon_deg);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("invalid GeoJSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array()) {
    throw InputError("GeoJSON input must be a FeatureCollection");
  }

  RegionSet out;
  std::map<std::string, std::size_t> index;
  for (const auto& feature : doc["features"]) {
    const auto& props = feature.value("properties", json::object());
    if (!props.contains("id") || !props.contains("value") || !props["value"].is_number()) {
      throw InputError("every feature needs properties 'id' and numeric 'value'");
    }
    const std::string id =
        props["id"].is_string() ? props["id"].get<std::string>() : props["id"].dump();
    const double value = props["value"].get<double>();
    if (!(value > 0.0)) throw InputError("region '" + id + "' has a non-positive value");

    const auto& geometry = feature.value("geometry", json());
    if (!geometry.is_object()) throw InputError("feature '" + id + "' has no geometry");
    const std::string type = geometry.value("type", "");
    const auto& coords = geometry.value("coordinates", json());

    auto [it, inserted] = index.try_emplace(id, out.regions.size());
    if (inserted) {
      out.regions.push_back(Region{id, value, {}, 0.0, 0.0});
    } else if (out.regions[it->second].value != value) {
      throw InputError("features of region '" + id + "' disagree on its value");
    }
    auto& polys = out.regions[it->second].polygons;
    if (type == "Polygon") {
      polys.push_back(read_polygon(coords, rotation));
    } else if (type == "MultiPolygon") {
      if (!coords.is_array()) throw InputError("MultiPolygon coordinates must be an array");
      for (const auto& p : coords) polys.push_back(read_polygon(p, rotation));
    } else {
      throw InputError("unsupported geometry type '" + type + "'");
    }
  }
  if (out.regions.empty()) throw InputError("GeoJSON input contains no regions");
  return out;
}

}  // namespace cartogram
