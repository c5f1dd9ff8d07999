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

#include "geoshare/tiles/builder.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>

#include "geoshare/mesh/ops.h"
#include "geoshare/tiles/codec.h"
#include "geoshare/tiles/manifest.h"

namespace geoshare::tiles {
namespace {

namespace fs = std::filesystem;
using mesh::Aabb;
using mesh::TriangleMesh;

struct Node {
  std::vector<std::uint32_t> triangles;
  std::vector<Node> children;
};

Aabb TriangleBounds(const TriangleMesh& m, const std::vector<std::uint32_t>& triangles) {
  Aabb box = Aabb::FromPoint(m.Position(m.triangles[triangles.front()][0]));
  for (const auto f : triangles) {
    for (const auto v : m.triangles[f]) box.Expand(m.Position(v));
  }
  return box;
}

Eigen::Vector3d Centroid(const TriangleMesh& m, std::uint32_t f) {
  const auto& t = m.triangles[f];
  return (m.Position(t[0]) + m.Position(t[1]) + m.Position(t[2])) / 3.0;
}

void Split(const TriangleMesh& m, const BuildConfig& config, int depth, Node& node) {
  if (node.triangles.size() <= config.max_triangles_per_leaf || depth >= config.max_depth) {
    return;
  }
  const Eigen::Vector3d center = TriangleBounds(m, node.triangles).Center();
  std::vector<std::uint32_t> octants[8];
  for (const auto f : node.triangles) {
    const Eigen::Vector3d c = Centroid(m, f);
    const int octant = (c.x() >= center.x() ? 1 : 0) | (c.y() >= center.y() ? 2 : 0) |
                       (c.z() >= center.z() ? 4 : 0);
    octants[octant].push_back(f);
  }
  const auto occupied = std::count_if(std::begin(octants), std::end(octants),
                                      [](const auto& o) { return !o.empty(); });
  // Coincident centroids cannot be separated.
  if (occupied < 2) return;
  for (auto& octant : octants) {
    if (octant.empty()) continue;
    Node child;
    child.triangles = std::move(octant);
    Split(m, config, depth + 1, child);
    node.children.push_back(std::move(child));
  }
}

TriangleMesh Submesh(const TriangleMesh& m, std::vector<std::uint32_t> triangles) {
  std::sort(triangles.begin(), triangles.end());
  std::vector<std::uint32_t> used;
  for (const auto f : triangles) used.insert(used.end(), m.triangles[f].begin(), m.triangles[f].end());
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  std::map<std::uint32_t, std::uint32_t> remap;
  TriangleMesh out;
  for (const auto v : used) {
    remap[v] = static_cast<std::uint32_t>(out.positions.size());
    out.positions.push_back(m.positions[v]);
    if (m.HasNormals()) out.normals.push_back(m.normals[v]);
    if (m.HasColors()) out.colors.push_back(m.colors[v]);
  }
  for (const auto f : triangles) {
    const auto& t = m.triangles[f];
    out.triangles.push_back({remap[t[0]], remap[t[1]], remap[t[2]]});
  }
  return out;
}

void SubtreeTriangles(const Node& node, std::vector<std::uint32_t>& out) {
  if (node.children.empty()) {
    out.insert(out.end(), node.triangles.begin(), node.triangles.end());
    return;
  }
  for (const auto& child : node.children) SubtreeTriangles(child, out);
}

struct Emitted {
  Tile tile;
  int height = 0;
};

// Post-order emission: children first so their boxes and errors are known;
// ids are assigned pre-order through `next_id` reserved before recursing.
Emitted Emit(const TriangleMesh& m, const BuildConfig& config, const Node& node,
             std::size_t& next_id, std::vector<TileContent>& contents) {
  const std::size_t id = next_id++;
  const std::size_t slot = contents.size();
  contents.emplace_back();
  Emitted out;
  std::vector<std::uint32_t> triangles;
  SubtreeTriangles(node, triangles);
  Aabb box = TriangleBounds(m, triangles);

  double child_error = 0.0;
  for (const auto& child : node.children) {
    Emitted e = Emit(m, config, child, next_id, contents);
    out.height = std::max(out.height, e.height + 1);
    child_error = std::max(child_error, e.tile.geometric_error);
    const Aabb child_box = e.tile.bounding_volume.ToAabb();
    box.Expand(child_box.min);
    box.Expand(child_box.max);
    out.tile.children.push_back(std::move(e.tile));
  }

  TriangleMesh content = Submesh(m, std::move(triangles));
  if (!node.children.empty()) {
    const double ratio = std::pow(config.lod_ratio_per_level, out.height);
    auto simplified = mesh::Simplify(content, ratio);
    content = std::move(simplified.mesh);
    out.tile.geometric_error = std::max(simplified.max_deviation, child_error);
    for (std::uint32_t v = 0; v < content.positions.size(); ++v) box.Expand(content.Position(v));
  }
  out.tile.bounding_volume = BoundingBox::FromAabb(box);
  out.tile.refine = RefineMode::kReplace;
  out.tile.content_uri = "tiles/" + std::to_string(id) + ".gtb";
  contents[slot] = {*out.tile.content_uri, std::move(content)};
  return out;
}

}  // namespace

void BuildConfig::Validate() const {
  if (max_triangles_per_leaf == 0) {
    Fail(TilesErrc::kInvalidConfig, "max_triangles_per_leaf must be positive");
  }
  if (max_depth <= 0) Fail(TilesErrc::kInvalidConfig, "max_depth must be positive");
  if (!(lod_ratio_per_level > 0.0 && lod_ratio_per_level < 1.0)) {
    Fail(TilesErrc::kInvalidConfig, "lod_ratio_per_level must be in (0, 1)");
  }
}

BuiltTileset BuildTileset(const TriangleMesh& mesh, const GeoAnchor& anchor,
                          const std::string& dataset_id, const BuildConfig& config) {
  config.Validate();
  if (mesh.triangles.empty()) Fail(TilesErrc::kEmptyMesh, "mesh has no triangles");
  mesh.Validate();
  Node root;
  root.triangles.resize(mesh.triangles.size());
  for (std::uint32_t f = 0; f < mesh.triangles.size(); ++f) root.triangles[f] = f;
  Split(mesh, config, 0, root);

  BuiltTileset out;
  std::size_t next_id = 0;
  out.tileset.root = Emit(mesh, config, root, next_id, out.contents).tile;
  out.tileset.geo_anchor = anchor;
  out.tileset.dataset_id = dataset_id;
  return out;
}

std::optional<fs::path> ResolveContentUri(const fs::path& dir, const std::string& uri) {
  const fs::path rel(uri);
  if (uri.empty() || rel.is_absolute() || rel.has_root_name()) return std::nullopt;
  for (const auto& part : rel.lexically_normal()) {
    if (part == "..") return std::nullopt;
  }
  return dir / rel.lexically_normal();
}

void WriteTilesetDirectory(const fs::path& dir, const BuiltTileset& built) {
  std::error_code ec;
  fs::create_directories(dir / "tiles", ec);
  if (ec) Fail(TilesErrc::kIoError, "cannot create " + (dir / "tiles").string());
  for (const auto& content : built.contents) {
    const auto path = ResolveContentUri(dir, content.uri);
    if (!path) Fail(TilesErrc::kIoError, "content uri escapes the tileset: " + content.uri);
    const auto bytes = EncodeTile(content.mesh);
    std::ofstream out(*path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) Fail(TilesErrc::kIoError, "cannot write " + path->string());
  }
  std::ofstream manifest(dir / "tileset.json", std::ios::binary);
  manifest << WriteManifest(built.tileset);
  if (!manifest) Fail(TilesErrc::kIoError, "cannot write " + (dir / "tileset.json").string());
}

namespace {

std::optional<std::string> ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

Tileset ReadTilesetDirectory(const fs::path& dir) {
  const auto text = ReadFile(dir / "tileset.json");
  if (!text) Fail(TilesErrc::kIoError, "cannot read " + (dir / "tileset.json").string());
  return ParseManifest(*text);
}

std::vector<Violation> ValidateTilesetDirectory(const fs::path& dir) {
  const Tileset tileset = ReadTilesetDirectory(dir);
  return ValidateTileset(tileset, [&](const std::string& uri) -> std::optional<TriangleMesh> {
    const auto path = ResolveContentUri(dir, uri);
    if (!path || !fs::is_regular_file(*path)) return std::nullopt;
    const auto bytes = ReadFile(*path);
    if (!bytes) return std::nullopt;
    try {
      return DecodeTile(std::span(reinterpret_cast<const std::uint8_t*>(bytes->data()),
                                  bytes->size()));
    } catch (const TilesError&) {
      return std::nullopt;
    }
  });
}

}  // namespace geoshare::tiles
