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

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoshare/server/error.h"
#include "geoshare/server/wmts.h"
#include "geoshare/tiles/tileset.h"

namespace geoshare::server {

struct LayerFeature {
  std::string feature_id;
  nlohmann::json geometry;  // GeoJSON geometry, served back unchanged
  LonLatBox extent;         // bounding box of all geometry coordinates
  std::map<std::string, std::string> attributes;
};

// A static vector layer loaded from a GeoJSON FeatureCollection. Features
// need an "id" (string or integer) unique within the layer. Non-string
// property values are kept as their JSON text.
class VectorLayer {
 public:
  static VectorLayer FromGeoJson(const std::string& layer_id, const nlohmann::json& doc);
  static VectorLayer Load(const std::string& layer_id, const std::filesystem::path& path);

  const std::string& id() const { return id_; }
  const std::vector<LayerFeature>& features() const { return features_; }
  // Union of all feature extents; nullopt for an empty layer.
  std::optional<LonLatBox> Extent() const;

  // Features whose extent intersects `bbox` (closed), sorted by feature_id.
  std::vector<const LayerFeature*> Query(const LonLatBox& bbox) const;

 private:
  std::string id_;
  std::vector<LayerFeature> features_;  // sorted by feature_id
};

// "lonMin,latMin,lonMax,latMax"; raises InvalidBbox.
LonLatBox ParseBboxParam(const std::string& text);
void ValidateQueryBbox(const LonLatBox& bbox);

nlohmann::json ToFeatureCollection(const std::vector<const LayerFeature*>& features);

enum class TagKind { kPhenomenon, kData };

struct Annotation {
  std::string dataset_id;
  TagKind tag_kind = TagKind::kPhenomenon;
  std::array<double, 3> anchor{};
  std::string title;
  std::string body;
  std::vector<std::string> media;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

const char* ToString(TagKind kind);

// Parses {tags:[...]} and checks every anchor lies inside `root_box`.
std::vector<Annotation> ParseAnnotations(const std::string& dataset_id, const nlohmann::json& doc,
                                         const tiles::BoundingBox& root_box);
nlohmann::json ToJson(const std::vector<Annotation>& tags);

}  // namespace geoshare::server
