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
#include <filesystem>
#include <string>
#include <vector>

#include "geoshare/mesh/types.h"
#include "geoshare/tiles/tileset.h"

namespace geoshare::tiles {

struct BuildConfig {
  std::size_t max_triangles_per_leaf = 5000;
  int max_depth = 8;
  double lod_ratio_per_level = 0.3;

  // Throws kInvalidConfig.
  void Validate() const;
};

struct TileContent {
  std::string uri;
  mesh::TriangleMesh mesh;
};

struct BuiltTileset {
  Tileset tileset;
  std::vector<TileContent> contents;  // pre-order
};

// Octree over triangle centroids. Leaves carry full-resolution geometry
// with error 0; an interior tile of height h carries its subtree simplified
// to lod_ratio^h. Tile content lives at tiles/<pre-order id>.gtb. Throws
// kEmptyMesh or kInvalidConfig.
BuiltTileset BuildTileset(const mesh::TriangleMesh& mesh, const GeoAnchor& anchor,
                          const std::string& dataset_id, const BuildConfig& config = {});

// Writes tileset.json and tiles/*.gtb under `dir`, creating it if needed.
void WriteTilesetDirectory(const std::filesystem::path& dir, const BuiltTileset& built);

Tileset ReadTilesetDirectory(const std::filesystem::path& dir);

// Manifest plus content checks against the files under `dir`. A manifest that
// cannot be read or parsed throws.
std::vector<Violation> ValidateTilesetDirectory(const std::filesystem::path& dir);

// Resolves a relative content URI inside `dir`; nullopt for absolute URIs or
// ones escaping the directory.
std::optional<std::filesystem::path> ResolveContentUri(const std::filesystem::path& dir,
                                                       const std::string& uri);

}  // namespace geoshare::tiles
