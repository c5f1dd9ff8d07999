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

#include "geoshare/tiles/manifest.h"

#include <cmath>

#include <json.hpp>

namespace geoshare::tiles {
namespace {

using nlohmann::json;

json TileToJson(const Tile& tile) {
  const auto& c = tile.bounding_volume.center;
  const auto& h = tile.bounding_volume.half_extent;
  json out;
  out["boundingVolume"]["box"] = {c.x(), c.y(), c.z(), h.x(), 0.0, 0.0,
                                  0.0,   h.y(), 0.0, 0.0, 0.0, h.z()};
  out["geometricError"] = tile.geometric_error;
  out["refine"] = ToString(tile.refine);
  if (tile.content_uri) out["content"]["uri"] = *tile.content_uri;
  if (!tile.children.empty()) {
    json children = json::array();
    for (const auto& child : tile.children) children.push_back(TileToJson(child));
    out["children"] = std::move(children);
  }
  return out;
}

const json& Require(const json& object, const std::string& key, const std::string& path) {
  if (!object.is_object()) {
    Fail(TilesErrc::kMalformedDocument, (path.empty() ? "document" : path) + " is not an object");
  }
  const auto it = object.find(key);
  if (it == object.end()) Fail(TilesErrc::kMissingField, path.empty() ? key : path + "." + key);
  return *it;
}

double Number(const json& value, const std::string& path) {
  if (!value.is_number()) Fail(TilesErrc::kMalformedDocument, path + " is not a number");
  return value.get<double>();
}

std::string Join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

RefineMode ParseRefine(const json& value, const std::string& path) {
  if (!value.is_string()) Fail(TilesErrc::kMalformedDocument, path + " is not a string");
  const auto& s = value.get_ref<const std::string&>();
  if (s == "REPLACE") return RefineMode::kReplace;
  if (s == "ADD") return RefineMode::kAdd;
  Fail(TilesErrc::kUnknownRefineMode, path + " = '" + s + "'");
}

BoundingBox ParseBox(const json& volume, const std::string& path) {
  const json& box = Require(volume, "box", path);
  const std::string box_path = Join(path, "box");
  if (!box.is_array() || box.size() != 12) {
    Fail(TilesErrc::kMalformedDocument, box_path + " must hold 12 numbers");
  }
  double v[12];
  for (int i = 0; i < 12; ++i) {
    v[i] = Number(box[i], box_path + "[" + std::to_string(i) + "]");
  }
  BoundingBox out;
  out.center = {v[0], v[1], v[2]};
  // Half axes need not be axis aligned; keep the enclosing axis-aligned box.
  for (int axis = 0; axis < 3; ++axis) {
    out.half_extent[axis] =
        std::abs(v[3 + axis]) + std::abs(v[6 + axis]) + std::abs(v[9 + axis]);
  }
  return out;
}

Tile ParseTile(const json& node, const std::string& path, RefineMode inherited) {
  if (!node.is_object()) Fail(TilesErrc::kMalformedDocument, path + " is not an object");
  Tile tile;
  tile.bounding_volume = ParseBox(Require(node, "boundingVolume", path),
                                  Join(path, "boundingVolume"));
  tile.geometric_error =
      Number(Require(node, "geometricError", path), Join(path, "geometricError"));
  tile.refine = inherited;
  if (const auto it = node.find("refine"); it != node.end()) {
    tile.refine = ParseRefine(*it, Join(path, "refine"));
  }
  if (const auto it = node.find("content"); it != node.end()) {
    const json& uri = Require(*it, "uri", Join(path, "content"));
    if (!uri.is_string()) Fail(TilesErrc::kMalformedDocument, path + ".content.uri");
    tile.content_uri = uri.get<std::string>();
  }
  if (const auto it = node.find("children"); it != node.end()) {
    if (!it->is_array()) Fail(TilesErrc::kMalformedDocument, path + ".children");
    for (std::size_t i = 0; i < it->size(); ++i) {
      tile.children.push_back(ParseTile((*it)[i],
                                        path + ".children[" + std::to_string(i) + "]",
                                        tile.refine));
    }
  }
  return tile;
}

}  // namespace

std::string WriteManifest(const Tileset& tileset) {
  json doc;
  doc["asset"]["version"] = tileset.version;
  doc["geometricError"] = tileset.root.geometric_error;
  doc["root"] = TileToJson(tileset.root);
  const auto& a = tileset.geo_anchor;
  doc["extras"]["geoAnchor"] = {a.longitude_deg, a.latitude_deg, a.height_m};
  doc["extras"]["datasetId"] = tileset.dataset_id;
  return doc.dump(2) + "\n";
}

Tileset ParseManifest(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    Fail(TilesErrc::kMalformedDocument, e.what());
  }
  Tileset out;
  const json& version = Require(Require(doc, "asset", ""), "version", "asset");
  if (!version.is_string()) Fail(TilesErrc::kMalformedDocument, "asset.version");
  out.version = version.get<std::string>();
  Number(Require(doc, "geometricError", ""), "geometricError");
  out.root = ParseTile(Require(doc, "root", ""), "root", RefineMode::kReplace);
  if (const auto it = doc.find("extras"); it != doc.end()) {
    if (const auto anchor = it->find("geoAnchor"); anchor != it->end()) {
      if (!anchor->is_array() || anchor->size() != 3) {
        Fail(TilesErrc::kMalformedDocument, "extras.geoAnchor must hold 3 numbers");
      }
      out.geo_anchor = {Number((*anchor)[0], "extras.geoAnchor[0]"),
                        Number((*anchor)[1], "extras.geoAnchor[1]"),
                        Number((*anchor)[2], "extras.geoAnchor[2]")};
    }
    if (const auto id = it->find("datasetId"); id != it->end()) {
      if (!id->is_string()) Fail(TilesErrc::kMalformedDocument, "extras.datasetId");
      out.dataset_id = id->get<std::string>();
    }
  }
  return out;
}

}  // namespace geoshare::tiles
