// Copyright 2026 The GeoShare Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "geoshare/server/layers.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace geoshare::server {
namespace {

using nlohmann::json;

bool IsValidLonLat(double lon, double lat) {
  return std::isfinite(lon) && std::isfinite(lat) && std::abs(lon) <= 180.0 &&
         std::abs(lat) <= 90.0;
}

// Walks nested coordinate arrays down to [lon, lat, ...] positions.
void ExtendExtent(const json& coords, LonLatBox& box, bool& any, const std::string& where) {
  if (!coords.is_array()) Fail(ServerErrc::kInvalidLayer, where + ": coordinates must be arrays");
  if (!coords.empty() && coords[0].is_number()) {
    if (coords.size() < 2 || !coords[1].is_number()) {
      Fail(ServerErrc::kInvalidLayer, where + ": position needs lon and lat");
    }
    const double lon = coords[0].get<double>(), lat = coords[1].get<double>();
    if (!IsValidLonLat(lon, lat)) Fail(ServerErrc::kInvalidLayer, where + ": position out of range");
    if (!any) box = {lon, lat, lon, lat};
    box = {std::min(box.lon_min, lon), std::min(box.lat_min, lat), std::max(box.lon_max, lon),
           std::max(box.lat_max, lat)};
    any = true;
    return;
  }
  for (const auto& c : coords) ExtendExtent(c, box, any, where);
}

void GeometryExtent(const json& geometry, LonLatBox& box, bool& any, const std::string& where) {
  if (!geometry.is_object() || !geometry.contains("type")) {
    Fail(ServerErrc::kInvalidLayer, where + ": missing geometry");
  }
  const std::string type = geometry.at("type").get<std::string>();
  if (type == "GeometryCollection") {
    for (const auto& g : geometry.at("geometries")) GeometryExtent(g, box, any, where);
    return;
  }
  static const std::vector<std::string> kTypes{"Point",      "MultiPoint",      "LineString",
                                               "MultiLineString", "Polygon", "MultiPolygon"};
  if (std::find(kTypes.begin(), kTypes.end(), type) == kTypes.end()) {
    Fail(ServerErrc::kInvalidLayer, where + ": unsupported geometry '" + type + "'");
  }
  ExtendExtent(geometry.at("coordinates"), box, any, where);
}

bool Intersects(const LonLatBox& a, const LonLatBox& b) {
  return a.lon_min <= b.lon_max && b.lon_min <= a.lon_max && a.lat_min <= b.lat_max &&
         b.lat_min <= a.lat_max;
}

}  // namespace

VectorLayer VectorLayer::FromGeoJson(const std::string& layer_id, const json& doc) {
  VectorLayer layer;
  layer.id_ = layer_id;
  try {
    if (doc.value("type", "") != "FeatureCollection") {
      Fail(ServerErrc::kInvalidLayer, layer_id + ": not a FeatureCollection");
    }
    const auto& features = doc.at("features");
    for (std::size_t i = 0; i < features.size(); ++i) {
      const json& f = features[i];
      const std::string where = layer_id + ".features[" + std::to_string(i) + "]";
      LayerFeature feature;
      const auto id = f.find("id");
      if (id == f.end()) Fail(ServerErrc::kInvalidLayer, where + ": missing id");
      if (id->is_string()) {
        feature.feature_id = id->get<std::string>();
      } else if (id->is_number_integer()) {
        feature.feature_id = id->dump();
      } else {
        Fail(ServerErrc::kInvalidLayer, where + ": id must be a string or integer");
      }
      feature.geometry = f.at("geometry");
      bool any = false;
      GeometryExtent(feature.geometry, feature.extent, any, where);
      if (!any) Fail(ServerErrc::kInvalidLayer, where + ": empty geometry");
      if (const auto props = f.find("properties"); props != f.end() && props->is_object()) {
        for (const auto& [key, value] : props->items()) {
          feature.attributes[key] = value.is_string() ? value.get<std::string>() : value.dump();
        }
      }
      layer.features_.push_back(std::move(feature));
    }
  } catch (const json::exception& e) {
    Fail(ServerErrc::kInvalidLayer, layer_id + ": " + e.what());
  }
  std::sort(layer.features_.begin(), layer.features_.end(),
            [](const auto& a, const auto& b) { return a.feature_id < b.feature_id; });
  const auto dup = std::adjacent_find(layer.features_.begin(), layer.features_.end(),
                                      [](const auto& a, const auto& b) {
                                        return a.feature_id == b.feature_id;
                                      });
  if (dup != layer.features_.end()) {
    Fail(ServerErrc::kInvalidLayer, layer_id + ": duplicate feature id '" + dup->feature_id + "'");
  }
  return layer;
}

VectorLayer VectorLayer::Load(const std::string& layer_id, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ServerErrc::kIoError, "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    Fail(ServerErrc::kInvalidLayer, path.string() + ": " + e.what());
  }
  return FromGeoJson(layer_id, doc);
}

std::optional<LonLatBox> VectorLayer::Extent() const {
  if (features_.empty()) return std::nullopt;
  LonLatBox box = features_.front().extent;
  for (const auto& f : features_) {
    box = {std::min(box.lon_min, f.extent.lon_min), std::min(box.lat_min, f.extent.lat_min),
           std::max(box.lon_max, f.extent.lon_max), std::max(box.lat_max, f.extent.lat_max)};
  }
  return box;
}

std::vector<const LayerFeature*> VectorLayer::Query(const LonLatBox& bbox) const {
  ValidateQueryBbox(bbox);
  std::vector<const LayerFeature*> out;
  for (const auto& f : features_) {
    if (Intersects(f.extent, bbox)) out.push_back(&f);
  }
  return out;
}

void ValidateQueryBbox(const LonLatBox& b) {
  if (!IsValidLonLat(b.lon_min, b.lat_min) || !IsValidLonLat(b.lon_max, b.lat_max) ||
      b.lon_min > b.lon_max || b.lat_min > b.lat_max) {
    Fail(ServerErrc::kInvalidBbox, "bbox must satisfy min <= max within lon/lat ranges");
  }
}

LonLatBox ParseBboxParam(const std::string& text) {
  std::array<double, 4> v{};
  std::size_t start = 0;
  for (int i = 0; i < 4; ++i) {
    const auto comma = i < 3 ? text.find(',', start) : text.size();
    if (comma == std::string::npos) Fail(ServerErrc::kInvalidBbox, "'" + text + "'");
    const char* begin = text.data() + start;
    const char* end = text.data() + comma;
    const auto [ptr, ec] = std::from_chars(begin, end, v[i]);
    if (ec != std::errc() || ptr != end) Fail(ServerErrc::kInvalidBbox, "'" + text + "'");
    start = comma + 1;
  }
  const LonLatBox box{v[0], v[1], v[2], v[3]};
  ValidateQueryBbox(box);
  return box;
}

json ToFeatureCollection(const std::vector<const LayerFeature*>& features) {
  json list = json::array();
  for (const auto* f : features) {
    list.push_back({{"type", "Feature"},
                    {"id", f->feature_id},
                    {"geometry", f->geometry},
                    {"properties", f->attributes}});
  }
  return {{"type", "FeatureCollection"}, {"features", std::move(list)}};
}

const char* ToString(TagKind kind) { return kind == TagKind::kPhenomenon ? "phenomenon" : "data"; }

std::vector<Annotation> ParseAnnotations(const std::string& dataset_id, const json& doc,
                                         const tiles::BoundingBox& root_box) {
  std::vector<Annotation> out;
  try {
    const auto& tags = doc.at("tags");
    for (std::size_t i = 0; i < tags.size(); ++i) {
      const json& t = tags[i];
      const std::string where = dataset_id + ".tags[" + std::to_string(i) + "]";
      Annotation a;
      a.dataset_id = dataset_id;
      const std::string kind = t.at("tag_kind").get<std::string>();
      if (kind == "phenomenon") {
        a.tag_kind = TagKind::kPhenomenon;
      } else if (kind == "data") {
        a.tag_kind = TagKind::kData;
      } else {
        Fail(ServerErrc::kInvalidAnnotation, where + ": tag_kind '" + kind + "'");
      }
      const auto& anchor = t.at("anchor");
      if (!anchor.is_array() || anchor.size() != 3) {
        Fail(ServerErrc::kInvalidAnnotation, where + ": anchor must be [x, y, z]");
      }
      for (int k = 0; k < 3; ++k) a.anchor[k] = anchor[k].get<double>();
      if (!root_box.Contains(Eigen::Vector3d(a.anchor[0], a.anchor[1], a.anchor[2]),
                             tiles::kContainmentSlack)) {
        Fail(ServerErrc::kInvalidAnnotation, where + ": anchor outside the dataset bounds");
      }
      a.title = t.at("title").get<std::string>();
      a.body = t.value("body", "");
      if (const auto media = t.find("media"); media != t.end()) {
        a.media = media->get<std::vector<std::string>>();
      }
      out.push_back(std::move(a));
    }
  } catch (const json::exception& e) {
    Fail(ServerErrc::kInvalidAnnotation, dataset_id + ": " + e.what());
  }
  return out;
}

json ToJson(const std::vector<Annotation>& tags) {
  json list = json::array();
  for (const auto& a : tags) {
    list.push_back({{"tag_kind", ToString(a.tag_kind)},
                    {"anchor", a.anchor},
                    {"title", a.title},
                    {"body", a.body},
                    {"media", a.media}});
  }
  return {{"tags", std::move(list)}};
}

}  // namespace geoshare::server
