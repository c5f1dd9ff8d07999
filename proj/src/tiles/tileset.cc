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

#include "geoshare/tiles/tileset.h"

#include <cmath>
#include <limits>
#include <numbers>

namespace geoshare::tiles {

const char* ToString(TilesErrc code) {
  switch (code) {
    case TilesErrc::kEmptyMesh: return "EmptyMesh";
    case TilesErrc::kInvalidConfig: return "InvalidConfig";
    case TilesErrc::kNonPositiveDistance: return "NonPositiveDistance";
    case TilesErrc::kInvalidCamera: return "InvalidCamera";
    case TilesErrc::kInvalidArgument: return "InvalidArgument";
    case TilesErrc::kBadMagic: return "BadMagic";
    case TilesErrc::kUnsupportedVersion: return "UnsupportedVersion";
    case TilesErrc::kTruncatedBuffer: return "TruncatedBuffer";
    case TilesErrc::kIndexOutOfRange: return "IndexOutOfRange";
    case TilesErrc::kMalformedDocument: return "MalformedDocument";
    case TilesErrc::kMissingField: return "MissingField";
    case TilesErrc::kUnknownRefineMode: return "UnknownRefineMode";
    case TilesErrc::kIoError: return "IoError";
  }
  return "Unknown";
}

void Fail(TilesErrc code, const std::string& message) {
  throw TilesError(code, std::string("tiles: ") + ToString(code) + ": " + message);
}

const char* ToString(RefineMode mode) {
  return mode == RefineMode::kAdd ? "ADD" : "REPLACE";
}

const char* ToString(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kNegativeError: return "NegativeError";
    case ViolationKind::kContainment: return "Containment";
    case ViolationKind::kMonotonicity: return "Monotonicity";
    case ViolationKind::kContentOutsideBox: return "ContentOutsideBox";
    case ViolationKind::kUnresolvedContent: return "UnresolvedContent";
  }
  return "Unknown";
}

BoundingBox BoundingBox::FromAabb(const mesh::Aabb& box) {
  return {box.Center(), box.HalfExtent()};
}

mesh::Aabb BoundingBox::ToAabb() const {
  return {center - half_extent, center + half_extent};
}

double BoundingBox::Magnitude() const {
  return center.cwiseAbs().maxCoeff() + half_extent.cwiseAbs().maxCoeff();
}

bool BoundingBox::Contains(const BoundingBox& inner, double slack) const {
  const double tol = slack * std::max({1.0, Magnitude(), inner.Magnitude()});
  const mesh::Aabb outer_box = ToAabb();
  const mesh::Aabb inner_box = inner.ToAabb();
  return (inner_box.min.array() >= outer_box.min.array() - tol).all() &&
         (inner_box.max.array() <= outer_box.max.array() + tol).all();
}

bool BoundingBox::Contains(const Eigen::Vector3d& p, double slack) const {
  const double tol = slack * std::max({1.0, Magnitude(), p.cwiseAbs().maxCoeff()});
  return ((p - center).cwiseAbs().array() <= half_extent.array() + tol).all();
}

double BoundingBox::Distance(const Eigen::Vector3d& p) const {
  return ToAabb().Distance(p);
}

void ForEachTile(const Tileset& tileset,
                 const std::function<void(const Tile&, std::size_t,
                                          std::optional<std::size_t>)>& visit) {
  std::size_t next = 0;
  const auto walk = [&](const auto& self, const Tile& tile,
                        std::optional<std::size_t> parent) -> void {
    const std::size_t id = next++;
    visit(tile, id, parent);
    for (const auto& child : tile.children) self(self, child, id);
  };
  walk(walk, tileset.root, std::nullopt);
}

std::size_t CountTiles(const Tileset& tileset) {
  std::size_t n = 0;
  ForEachTile(tileset, [&](const Tile&, std::size_t, std::optional<std::size_t>) { ++n; });
  return n;
}

void CameraState::Validate() const {
  if (!(fov_y > 0.0 && fov_y < std::numbers::pi)) {
    Fail(TilesErrc::kInvalidCamera, "field of view must be in (0, pi)");
  }
  if (!(viewport_height > 0.0) || !std::isfinite(viewport_height)) {
    Fail(TilesErrc::kInvalidCamera, "viewport height must be positive");
  }
  if (!position.allFinite()) Fail(TilesErrc::kInvalidCamera, "camera position is not finite");
}

double ScreenSpaceError(double geometric_error, double distance, const CameraState& camera) {
  if (!(distance > 0.0)) {
    Fail(TilesErrc::kNonPositiveDistance, "distance must be positive");
  }
  camera.Validate();
  return geometric_error * camera.viewport_height /
         (distance * 2.0 * std::tan(camera.fov_y / 2.0));
}

namespace {

double TileSse(const Tile& tile, const CameraState& camera) {
  const double d = tile.bounding_volume.Distance(camera.position);
  if (d > 0.0) return ScreenSpaceError(tile.geometric_error, d, camera);
  return tile.geometric_error > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

void Select(const Tile& tile, const CameraState& camera, double threshold,
            std::vector<std::string>& out) {
  const bool terminal = tile.IsLeaf() || TileSse(tile, camera) <= threshold;
  if (tile.content_uri && (terminal || tile.refine == RefineMode::kAdd)) {
    out.push_back(*tile.content_uri);
  }
  if (terminal) return;
  for (const auto& child : tile.children) Select(child, camera, threshold, out);
}

}  // namespace

std::vector<std::string> SelectTiles(const Tileset& tileset, const CameraState& camera,
                                     double threshold_px) {
  if (!(threshold_px > 0.0)) {
    Fail(TilesErrc::kInvalidArgument, "threshold must be positive");
  }
  camera.Validate();
  std::vector<std::string> out;
  Select(tileset.root, camera, threshold_px, out);
  return out;
}

std::vector<Violation> ValidateTileset(const Tileset& tileset, const ContentLoader& load) {
  std::vector<Violation> out;
  std::vector<const Tile*> by_id;
  ForEachTile(tileset, [&](const Tile& tile, std::size_t id, std::optional<std::size_t> parent) {
    by_id.push_back(&tile);
    const std::string name = "tile " + std::to_string(id);
    if (!(tile.geometric_error >= 0.0)) {
      out.push_back({ViolationKind::kNegativeError, id, parent,
                     name + " has negative geometric error"});
    }
    if (parent) {
      const Tile& p = *by_id[*parent];
      const std::string pair = name + " and its parent tile " + std::to_string(*parent);
      if (!p.bounding_volume.Contains(tile.bounding_volume, kContainmentSlack)) {
        out.push_back({ViolationKind::kContainment, id, parent,
                       "box of " + pair + " is not contained"});
      }
      if (tile.geometric_error > p.geometric_error) {
        out.push_back({ViolationKind::kMonotonicity, id, parent,
                       "geometric error of " + pair + " increases downward"});
      }
    }
    if (!load || !tile.content_uri) return;
    const auto content = load(*tile.content_uri);
    if (!content) {
      out.push_back({ViolationKind::kUnresolvedContent, id, parent,
                     name + " content '" + *tile.content_uri + "' does not resolve"});
      return;
    }
    for (std::size_t v = 0; v < content->positions.size(); ++v) {
      if (!tile.bounding_volume.Contains(content->Position(v), kContainmentSlack)) {
        out.push_back({ViolationKind::kContentOutsideBox, id, parent,
                       name + " vertex " + std::to_string(v) + " lies outside its box"});
        break;
      }
    }
  });
  return out;
}

}  // namespace geoshare::tiles
