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

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "geoshare/common/error.h"
#include "geoshare/mesh/types.h"

namespace geoshare::tiles {

enum class TilesErrc {
  kEmptyMesh,
  kInvalidConfig,
  kNonPositiveDistance,
  kInvalidCamera,
  kInvalidArgument,
  kBadMagic,
  kUnsupportedVersion,
  kTruncatedBuffer,
  kIndexOutOfRange,
  kMalformedDocument,
  kMissingField,
  kUnknownRefineMode,
  kIoError,
};

using TilesError = Error<TilesErrc>;

const char* ToString(TilesErrc code);
[[noreturn]] void Fail(TilesErrc code, const std::string& message);

// Axis-aligned box kept as center and half extents, the form the manifest
// stores, so that manifests round-trip exactly.
struct BoundingBox {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d half_extent = Eigen::Vector3d::Zero();

  static BoundingBox FromAabb(const mesh::Aabb& box);
  mesh::Aabb ToAabb() const;
  // Largest coordinate magnitude reached by the box; scales tolerances.
  double Magnitude() const;
  // Closed containment with `slack` times the larger magnitude of the two boxes.
  bool Contains(const BoundingBox& inner, double slack) const;
  bool Contains(const Eigen::Vector3d& p, double slack) const;
  double Distance(const Eigen::Vector3d& p) const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

enum class RefineMode { kReplace, kAdd };

const char* ToString(RefineMode mode);

struct Tile {
  BoundingBox bounding_volume;
  double geometric_error = 0.0;
  RefineMode refine = RefineMode::kReplace;
  std::optional<std::string> content_uri;
  std::vector<Tile> children;

  bool IsLeaf() const { return children.empty(); }
  friend bool operator==(const Tile&, const Tile&) = default;
};

struct GeoAnchor {
  double longitude_deg = 0.0;
  double latitude_deg = 0.0;
  double height_m = 0.0;

  friend bool operator==(const GeoAnchor&, const GeoAnchor&) = default;
};

struct Tileset {
  std::string version = "1.0";
  Tile root;
  GeoAnchor geo_anchor;
  std::string dataset_id;

  friend bool operator==(const Tileset&, const Tileset&) = default;
};

// Calls visit(tile, preorder_id, parent_id) for every tile; the root has no
// parent.
void ForEachTile(const Tileset& tileset,
                 const std::function<void(const Tile&, std::size_t,
                                          std::optional<std::size_t>)>& visit);
std::size_t CountTiles(const Tileset& tileset);

struct CameraState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d direction = -Eigen::Vector3d::UnitZ();
  double fov_y = 1.0;  // radians
  double viewport_height = 1.0;  // pixels

  // Throws kInvalidCamera unless 0 < fov < pi and the viewport is positive.
  void Validate() const;
};

inline constexpr double kDefaultSseThreshold = 16.0;

// geometric_error * viewport_height / (distance * 2 * tan(fov / 2)).
// Throws kNonPositiveDistance for distance <= 0.
double ScreenSpaceError(double geometric_error, double distance, const CameraState& camera);

// Pre-order list of content URIs forming the cut for `camera`. A tile whose
// box contains the camera always refines. Throws kInvalidArgument unless
// threshold_px > 0.
std::vector<std::string> SelectTiles(const Tileset& tileset, const CameraState& camera,
                                     double threshold_px = kDefaultSseThreshold);

enum class ViolationKind {
  kNegativeError,
  kContainment,
  kMonotonicity,
  kContentOutsideBox,
  kUnresolvedContent,
};

const char* ToString(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::size_t tile = 0;  // pre-order id
  std::optional<std::size_t> parent;
  std::string message;
};

inline constexpr double kContainmentSlack = 1e-9;

// Loads decoded content for a URI, or nullopt when it does not resolve.
using ContentLoader = std::function<std::optional<mesh::TriangleMesh>(const std::string&)>;

// Structural checks always run; content checks run when `load` is set.
std::vector<Violation> ValidateTileset(const Tileset& tileset, const ContentLoader& load = {});

}  // namespace geoshare::tiles
