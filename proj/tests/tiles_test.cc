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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "geoshare/mesh/primitives.h"
#include "geoshare/tiles/builder.h"
#include "geoshare/tiles/codec.h"
#include "geoshare/tiles/manifest.h"
#include "geoshare/tiles/tileset.h"

namespace geoshare::tiles {
namespace {

namespace fs = std::filesystem;
using mesh::TriangleMesh;

template <typename F>
TilesErrc CodeOf(F&& f) {
  try {
    f();
  } catch (const TilesError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no TilesError thrown";
  return TilesErrc::kIoError;
}

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("geoshare_tiles_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CameraState Camera(const Eigen::Vector3d& position, double fov = std::numbers::pi / 2,
                   double viewport = 1000.0) {
  CameraState c;
  c.position = position;
  c.fov_y = fov;
  c.viewport_height = viewport;
  return c;
}

TriangleMesh Translated(TriangleMesh m, const Eigen::Vector3f& offset) {
  for (auto& p : m.positions) p += offset;
  return m;
}

TriangleMesh Concat(const std::vector<TriangleMesh>& parts) {
  TriangleMesh out;
  for (const auto& part : parts) {
    const auto base = static_cast<std::uint32_t>(out.positions.size());
    out.positions.insert(out.positions.end(), part.positions.begin(), part.positions.end());
    for (const auto& t : part.triangles) out.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  }
  return out;
}

// A lumpy closed surface together with a noisy open sheet.
TriangleMesh RandomScene(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  TriangleMesh sphere = mesh::Icosphere(3, 1.0 + 0.5 * std::abs(u(rng)));
  for (auto& p : sphere.positions) p *= 1.0f + 0.05f * u(rng);
  TriangleMesh sheet = mesh::PlanarGrid(14, 3.0);
  for (auto& p : sheet.positions) p.z() += 0.05f * u(rng);
  return Concat({Translated(sphere, {u(rng), u(rng), u(rng)}),
                 Translated(sheet, {3.0f + u(rng), u(rng), u(rng)})});
}

// ---------------------------------------------------------------- boxes

TEST(BoundingBox, AabbConversionAndDistance) {
  const mesh::Aabb a{{-1, 0, 2}, {3, 4, 2}};
  const auto b = BoundingBox::FromAabb(a);
  EXPECT_EQ(b.center, Eigen::Vector3d(1, 2, 2));
  EXPECT_EQ(b.half_extent, Eigen::Vector3d(2, 2, 0));
  EXPECT_EQ(b.ToAabb(), a);
  EXPECT_DOUBLE_EQ(b.Distance({1, 2, 2}), 0.0);
  EXPECT_DOUBLE_EQ(b.Distance({6, 2, 2}), 3.0);
  EXPECT_DOUBLE_EQ(b.Distance({6, 8, 2}), 5.0);
}

TEST(BoundingBox, ContainmentSlackIsRelative) {
  const BoundingBox outer{{1e6, 0, 0}, {1, 1, 1}};
  BoundingBox inner = outer;
  inner.half_extent.x() += 1e-4;  // 1e-10 relative to the 1e6 magnitude
  EXPECT_TRUE(outer.Contains(inner, kContainmentSlack));
  inner.half_extent.x() += 1e-2;
  EXPECT_FALSE(outer.Contains(inner, kContainmentSlack));
  EXPECT_TRUE(outer.Contains(Eigen::Vector3d(1e6 + 1, 1, -1), 0.0));
  EXPECT_FALSE(outer.Contains(Eigen::Vector3d(1e6 + 1.1, 1, -1), kContainmentSlack));
}

// ------------------------------------------------------------------ sse

TEST(ScreenSpaceError, Examples) {
  const auto cam = Camera({0, 0, 0});
  EXPECT_EQ(ScreenSpaceError(0.0, 5.0, cam), 0.0);
  EXPECT_NEAR(ScreenSpaceError(2.0, 100.0, cam), 10.0, 1e-12);
}

TEST(ScreenSpaceError, FollowsFormulaAndHalvesWithDistance) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const auto cam = Camera({0, 0, 0}, u(rng) * 3.1, 100.0 + 2000.0 * u(rng));
    const double e = 10.0 * u(rng), d = 1000.0 * u(rng);
    const double oracle = e * cam.viewport_height / (d * 2.0 * std::tan(cam.fov_y / 2.0));
    const double sse = ScreenSpaceError(e, d, cam);
    EXPECT_NEAR(sse, oracle, 1e-12 * oracle);
    EXPECT_NEAR(ScreenSpaceError(e, 2.0 * d, cam), sse / 2.0, 1e-12 * sse);
    EXPECT_LT(ScreenSpaceError(e, d * (1.0 + u(rng)), cam), sse);
  }
}

TEST(ScreenSpaceError, Preconditions) {
  const auto cam = Camera({0, 0, 0});
  EXPECT_EQ(CodeOf([&] { ScreenSpaceError(1.0, 0.0, cam); }), TilesErrc::kNonPositiveDistance);
  EXPECT_EQ(CodeOf([&] { ScreenSpaceError(1.0, -1.0, cam); }), TilesErrc::kNonPositiveDistance);
  EXPECT_EQ(CodeOf([&] { ScreenSpaceError(1.0, 1.0, Camera({0, 0, 0}, 0.0)); }),
            TilesErrc::kInvalidCamera);
  EXPECT_EQ(CodeOf([&] { ScreenSpaceError(1.0, 1.0, Camera({0, 0, 0}, std::numbers::pi)); }),
            TilesErrc::kInvalidCamera);
  EXPECT_EQ(CodeOf([&] { ScreenSpaceError(1.0, 1.0, Camera({0, 0, 0}, 1.0, 0.0)); }),
            TilesErrc::kInvalidCamera);
}

// ------------------------------------------------------------ selection

// Random tree with boxes nested by construction and errors decreasing.
Tile RandomTile(std::mt19937_64& rng, const BoundingBox& box, double error, int depth,
                int& next_id) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tile t;
  t.bounding_volume = box;
  t.geometric_error = error;
  t.content_uri = "tiles/" + std::to_string(next_id++) + ".gtb";
  if (depth == 0 || u(rng) < 0.2) {
    t.geometric_error = 0.0;
    return t;
  }
  const int n = 1 + static_cast<int>(u(rng) * 4);
  for (int i = 0; i < n; ++i) {
    BoundingBox child;
    child.half_extent = box.half_extent * (0.3 + 0.2 * u(rng));
    for (int a = 0; a < 3; ++a) {
      const double room = box.half_extent[a] - child.half_extent[a];
      child.center[a] = box.center[a] + room * (2.0 * u(rng) - 1.0);
    }
    t.children.push_back(RandomTile(rng, child, error * (0.2 + 0.5 * u(rng)), depth - 1, next_id));
  }
  return t;
}

Tileset RandomTileset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  int next = 0;
  Tileset ts;
  ts.root = RandomTile(rng, {{0, 0, 0}, {100, 100, 50}}, 20.0, 4, next);
  return ts;
}

// Reference cut: a tile is in the cut when every ancestor refines and the
// tile itself does not.
void ReferenceCut(const Tile& t, const CameraState& cam, double threshold,
                  std::vector<std::string>& out) {
  const auto box = t.bounding_volume.ToAabb();
  const Eigen::Vector3d q = cam.position.cwiseMax(box.min).cwiseMin(box.max);
  const double d = (q - cam.position).norm();
  double sse = 0.0;
  if (d == 0.0) {
    sse = t.geometric_error > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  } else {
    sse = t.geometric_error * cam.viewport_height / (2.0 * d * std::tan(cam.fov_y / 2.0));
  }
  const bool refines = !t.children.empty() && sse > threshold;
  if (!refines) {
    out.push_back(*t.content_uri);
    return;
  }
  for (const auto& c : t.children) ReferenceCut(c, cam, threshold, out);
}

void Leaves(const Tile& t, std::vector<std::string>& out) {
  if (t.children.empty()) out.push_back(*t.content_uri);
  for (const auto& c : t.children) Leaves(c, out);
}

TEST(SelectTiles, FarCameraSelectsRootOnly) {
  const auto ts = RandomTileset(1);
  EXPECT_EQ(SelectTiles(ts, Camera({1e7, 0, 0}), 16.0),
            std::vector<std::string>{*ts.root.content_uri});
}

TEST(SelectTiles, TinyThresholdSelectsAllLeaves) {
  const auto ts = RandomTileset(2);
  std::vector<std::string> leaves;
  Leaves(ts.root, leaves);
  EXPECT_EQ(SelectTiles(ts, Camera({500, 500, 500}), 1e-12), leaves);
}

TEST(SelectTiles, MatchesReferenceAndFormsAntichainPartition) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto ts = RandomTileset(seed);
    // Map each uri to its leaf set for the partition check.
    std::map<std::string, std::vector<std::string>> leaves_of;
    ForEachTile(ts, [&](const Tile& t, std::size_t, std::optional<std::size_t>) {
      Leaves(t, leaves_of[*t.content_uri]);
    });
    std::vector<std::string> all_leaves;
    Leaves(ts.root, all_leaves);
    for (int k = 0; k < 20; ++k) {
      const auto cam = Camera(Eigen::Vector3d(u(rng), u(rng), u(rng)) * 300.0);
      const double threshold = std::pow(10.0, 2.0 * u(rng) + 1.0);
      const auto got = SelectTiles(ts, cam, threshold);
      std::vector<std::string> want;
      ReferenceCut(ts.root, cam, threshold, want);
      ASSERT_EQ(got, want) << "seed " << seed;
      std::vector<std::string> covered;
      for (const auto& uri : got) {
        covered.insert(covered.end(), leaves_of[uri].begin(), leaves_of[uri].end());
      }
      EXPECT_EQ(covered, all_leaves);  // disjoint, ordered, complete
    }
  }
}

TEST(SelectTiles, CloserCameraNeverCoarsens) {
  const auto ts = RandomTileset(3);
  std::size_t previous = 0;
  for (double x = 2000.0; x > 200.0; x *= 0.8) {
    const auto n = SelectTiles(ts, Camera({x, 0, 0})).size();
    EXPECT_GE(n, previous);
    previous = n;
  }
}

TEST(SelectTiles, CameraInsideBoxRefines) {
  Tileset ts;
  ts.root.bounding_volume = {{0, 0, 0}, {1, 1, 1}};
  ts.root.geometric_error = 1e-9;
  ts.root.content_uri = "root";
  Tile child;
  child.bounding_volume = {{0.5, 0, 0}, {0.5, 1, 1}};
  child.content_uri = "child";
  ts.root.children.push_back(child);
  EXPECT_EQ(SelectTiles(ts, Camera({0, 0, 0}), 1e9), std::vector<std::string>{"child"});
  EXPECT_EQ(SelectTiles(ts, Camera({10, 0, 0}), 1e9), std::vector<std::string>{"root"});
}

TEST(SelectTiles, AddRefinementKeepsParent) {
  Tileset ts;
  ts.root.bounding_volume = {{0, 0, 0}, {1, 1, 1}};
  ts.root.geometric_error = 1.0;
  ts.root.refine = RefineMode::kAdd;
  ts.root.content_uri = "root";
  Tile a, b;
  a.bounding_volume = b.bounding_volume = {{0, 0, 0}, {0.5, 0.5, 0.5}};
  a.content_uri = "a";
  b.content_uri = "b";
  ts.root.children = {a, b};
  EXPECT_EQ(SelectTiles(ts, Camera({0, 0, 0}), 16.0),
            (std::vector<std::string>{"root", "a", "b"}));
  EXPECT_EQ(SelectTiles(ts, Camera({1e6, 0, 0}), 16.0), std::vector<std::string>{"root"});
}

TEST(SelectTiles, RejectsNonPositiveThreshold) {
  const auto ts = RandomTileset(4);
  EXPECT_EQ(CodeOf([&] { SelectTiles(ts, Camera({0, 0, 0}), 0.0); }),
            TilesErrc::kInvalidArgument);
}

// ---------------------------------------------------------------- codec

TEST(Codec, SingleColoredTriangleMatchesHandEncoding) {
  TriangleMesh m;
  m.positions = {{1.0f, 0.0f, -2.5f}, {0.0f, 1.0f, 0.0f}, {0.0f, 0.0f, 1.0f}};
  m.colors = {{{255, 0, 0, 255}}, {{0, 255, 0, 128}}, {{1, 2, 3, 4}}};
  m.triangles = {{0, 1, 2}};
  const auto bytes = EncodeTile(m);
  std::vector<std::uint8_t> want = {'G', 'T', 'B', '1', 1, 0, 0, 0, 3, 0, 0, 0,
                                    1,   0,   0,   0,   2, 0, 0, 0};
  const auto f32 = [&](float x) {
    const auto bits = std::bit_cast<std::uint32_t>(x);
    for (int i = 0; i < 4; ++i) want.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  };
  for (const auto& p : m.positions) f32(p.x()), f32(p.y()), f32(p.z());
  for (const auto& c : m.colors) want.insert(want.end(), c.begin(), c.end());
  for (const std::uint8_t i : {0, 1, 2}) want.insert(want.end(), {i, 0, 0, 0});
  EXPECT_EQ(bytes, want);
  EXPECT_EQ(DecodeTile(bytes), m);
}

TEST(Codec, RandomMeshRoundTripsBitExact) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> u(-1e3f, 1e3f);
  std::uniform_int_distribution<int> byte(0, 255);
  TriangleMesh m;
  const std::uint32_t n = 6000;
  for (std::uint32_t i = 0; i < n; ++i) {
    m.positions.emplace_back(u(rng), u(rng), u(rng));
    m.normals.push_back(Eigen::Vector3f(u(rng), u(rng), u(rng)).normalized());
    m.colors.push_back({static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng)),
                        static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng))});
  }
  std::uniform_int_distribution<std::uint32_t> idx(0, n - 1);
  while (m.triangles.size() < 10000) {
    const mesh::Triangle t{idx(rng), idx(rng), idx(rng)};
    if (t[0] != t[1] && t[1] != t[2] && t[0] != t[2]) m.triangles.push_back(t);
  }
  const auto bytes = EncodeTile(m);
  EXPECT_EQ(bytes.size(), kGtbHeaderSize + n * 28u + 10000u * 12u);
  const auto back = DecodeTile(bytes);
  EXPECT_EQ(back, m);
  EXPECT_EQ(EncodeTile(back), bytes);
}

TEST(Codec, CorruptBuffers) {
  const auto bytes = EncodeTile(mesh::UnitCube(true));
  auto truncated = bytes;
  truncated.resize(bytes.size() - 6);  // mid-indices
  EXPECT_EQ(CodeOf([&] { DecodeTile(truncated); }), TilesErrc::kTruncatedBuffer);
  EXPECT_EQ(CodeOf([&] { DecodeTile(std::span(bytes).first(12)); }), TilesErrc::kTruncatedBuffer);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_EQ(CodeOf([&] { DecodeTile(trailing); }), TilesErrc::kTruncatedBuffer);
  auto magic = bytes;
  magic[3] = '2';
  EXPECT_EQ(CodeOf([&] { DecodeTile(magic); }), TilesErrc::kBadMagic);
  auto version = bytes;
  version[4] = 2;
  EXPECT_EQ(CodeOf([&] { DecodeTile(version); }), TilesErrc::kUnsupportedVersion);
  auto flags = bytes;
  flags[16] |= 4;
  EXPECT_EQ(CodeOf([&] { DecodeTile(flags); }), TilesErrc::kUnsupportedVersion);
  auto index = bytes;
  index[index.size() - 4] = 200;
  EXPECT_EQ(CodeOf([&] { DecodeTile(index); }), TilesErrc::kIndexOutOfRange);
}

// ------------------------------------------------------------- manifest

TEST(Manifest, MinimalSingleTile) {
  const std::string doc = R"({"asset":{"version":"1.0"},"geometricError":0,
    "root":{"boundingVolume":{"box":[0,0,0,1,0,0,0,2,0,0,0,3]},"geometricError":0,
            "refine":"REPLACE","content":{"uri":"tiles/0.gtb"}}})";
  const auto ts = ParseManifest(doc);
  EXPECT_EQ(CountTiles(ts), 1u);
  EXPECT_EQ(ts.root.bounding_volume.half_extent, Eigen::Vector3d(1, 2, 3));
  EXPECT_EQ(ts.root.content_uri, "tiles/0.gtb");
  EXPECT_TRUE(ValidateTileset(ts).empty());
}

TEST(Manifest, RoundTripPreservesTreeAndFullPrecision) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto ts = RandomTileset(seed);
    ts.geo_anchor = {116.39123456789012, 39.907654321098765, 43.21};
    ts.dataset_id = "set-" + std::to_string(seed);
    ts.root.geometric_error = 0.1 + 0.2;
    if (!ts.root.children.empty()) ts.root.children.front().refine = RefineMode::kAdd;
    const auto text = WriteManifest(ts);
    EXPECT_EQ(ParseManifest(text), ts);
    EXPECT_EQ(WriteManifest(ParseManifest(text)), text);
  }
}

TEST(Manifest, Errors) {
  EXPECT_EQ(CodeOf([] { ParseManifest("{not json"); }), TilesErrc::kMalformedDocument);
  EXPECT_EQ(CodeOf([] { ParseManifest("[]"); }), TilesErrc::kMalformedDocument);
  try {
    ParseManifest(R"({"asset":{"version":"1.0"},"geometricError":1,
      "root":{"boundingVolume":{"box":[0,0,0,1,0,0,0,1,0,0,0,1]}}})");
    FAIL();
  } catch (const TilesError& e) {
    EXPECT_EQ(e.code(), TilesErrc::kMissingField);
    EXPECT_NE(std::string(e.what()).find("root.geometricError"), std::string::npos);
  }
  EXPECT_EQ(CodeOf([] {
              ParseManifest(R"({"asset":{"version":"1.0"},"geometricError":1,
                "root":{"boundingVolume":{"box":[0,0,0,1,0,0,0,1,0,0,0,1]},
                        "geometricError":1,"refine":"MERGE"}})");
            }),
            TilesErrc::kUnknownRefineMode);
  EXPECT_EQ(CodeOf([] {
              ParseManifest(R"({"asset":{"version":"1.0"},"geometricError":1,
                "root":{"boundingVolume":{"box":[0,0,0]},"geometricError":1}})");
            }),
            TilesErrc::kMalformedDocument);
}

TEST(Manifest, ChildrenInheritRefineAndRotatedBoxesAreEnclosed) {
  const auto ts = ParseManifest(R"({"asset":{"version":"1.0"},"geometricError":2,
    "root":{"boundingVolume":{"box":[0,0,0,1,1,0,-1,1,0,0,0,1]},"geometricError":2,
            "refine":"ADD","children":[{"boundingVolume":{"box":[0,0,0,1,0,0,0,1,0,0,0,1]},
            "geometricError":0}]}})");
  EXPECT_EQ(ts.root.children.at(0).refine, RefineMode::kAdd);
  EXPECT_EQ(ts.root.bounding_volume.half_extent, Eigen::Vector3d(2, 2, 1));
}

// ------------------------------------------------------------ validation

TEST(Validate, ReportsConstructedViolations) {
  Tileset ts;
  ts.root.bounding_volume = {{0, 0, 0}, {1, 1, 1}};
  ts.root.geometric_error = 1.0;
  Tile inside, outside;
  inside.bounding_volume = {{0, 0, 0}, {0.5, 0.5, 0.5}};
  outside.bounding_volume = {{0.8, 0, 0}, {0.5, 0.5, 0.5}};
  ts.root.children = {inside, outside};
  auto report = ValidateTileset(ts);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].kind, ViolationKind::kContainment);
  EXPECT_EQ(report[0].tile, 2u);
  EXPECT_EQ(report[0].parent, 0u);
  EXPECT_NE(report[0].message.find("tile 2"), std::string::npos);
  EXPECT_NE(report[0].message.find("tile 0"), std::string::npos);

  ts.root.children = {inside};
  ts.root.children[0].geometric_error = 2.0;
  report = ValidateTileset(ts);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].kind, ViolationKind::kMonotonicity);
}

// -------------------------------------------------------------- builder

TEST(Builder, SmallMeshIsSingleRoot) {
  const auto built = BuildTileset(mesh::Icosphere(1), {}, "small");
  EXPECT_TRUE(built.tileset.root.IsLeaf());
  EXPECT_EQ(built.tileset.root.geometric_error, 0.0);
  ASSERT_EQ(built.contents.size(), 1u);
  EXPECT_EQ(built.contents[0].mesh, mesh::Icosphere(1));
}

TEST(Builder, EightCubesSplitIntoOctants) {
  std::vector<TriangleMesh> cubes;
  for (int octant = 0; octant < 8; ++octant) {
    cubes.push_back(Translated(mesh::UnitCube(true),
                               {octant & 1 ? 1.5f : -1.5f, octant & 2 ? 1.5f : -1.5f,
                                octant & 4 ? 1.5f : -1.5f}));
  }
  BuildConfig cfg;
  cfg.max_triangles_per_leaf = 12;
  const auto built = BuildTileset(Concat(cubes), {}, "cubes", cfg);
  const auto& root = built.tileset.root;
  ASSERT_EQ(root.children.size(), 8u);
  for (int octant = 0; octant < 8; ++octant) {
    const auto& child = root.children[octant];
    EXPECT_TRUE(child.IsLeaf());
    EXPECT_EQ(child.geometric_error, 0.0);
    const Eigen::Vector3d c = child.bounding_volume.center;
    EXPECT_EQ(c.x() > 0, (octant & 1) != 0);
    EXPECT_EQ(c.y() > 0, (octant & 2) != 0);
    EXPECT_EQ(c.z() > 0, (octant & 4) != 0);
    EXPECT_EQ(built.contents[octant + 1].mesh.triangles.size(), 12u);
    EXPECT_EQ(child.content_uri, "tiles/" + std::to_string(octant + 1) + ".gtb");
  }
  EXPECT_TRUE(ValidateTileset(built.tileset, [&](const std::string& uri) {
                for (const auto& c : built.contents) {
                  if (c.uri == uri) return std::optional(c.mesh);
                }
                return std::optional<TriangleMesh>();
              }).empty());
}

TEST(Builder, RandomScenesValidate) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    BuildConfig cfg;
    cfg.max_triangles_per_leaf = 150 + 100 * seed;
    cfg.max_depth = 2 + static_cast<int>(seed % 3);
    const auto m = RandomScene(seed);
    const auto built = BuildTileset(m, {10.0, 20.0, 30.0}, "scene", cfg);
    std::map<std::string, const TriangleMesh*> by_uri;
    for (const auto& c : built.contents) by_uri[c.uri] = &c.mesh;
    const auto report = ValidateTileset(built.tileset, [&](const std::string& uri) {
      const auto it = by_uri.find(uri);
      return it == by_uri.end() ? std::nullopt : std::optional(*it->second);
    });
    for (const auto& v : report) ADD_FAILURE() << v.message;

    std::size_t leaf_triangles = 0;
    std::size_t expected_id = 0;
    ForEachTile(built.tileset, [&](const Tile& t, std::size_t id, std::optional<std::size_t>) {
      EXPECT_EQ(t.refine, RefineMode::kReplace);
      EXPECT_EQ(t.content_uri, "tiles/" + std::to_string(expected_id++) + ".gtb");
      EXPECT_EQ(built.contents[id].uri, *t.content_uri);
      if (t.IsLeaf()) {
        EXPECT_EQ(t.geometric_error, 0.0);
        leaf_triangles += built.contents[id].mesh.triangles.size();
        EXPECT_LE(built.contents[id].mesh.triangles.size(), cfg.max_triangles_per_leaf);
      } else {
        EXPECT_GT(t.geometric_error, 0.0);
      }
    });
    EXPECT_EQ(leaf_triangles, m.triangles.size());
  }
}

TEST(Builder, DeterministicDirectoryRoundTrip) {
  const auto m = RandomScene(7);
  BuildConfig cfg;
  cfg.max_triangles_per_leaf = 300;
  const auto a = BuildTileset(m, {1, 2, 3}, "det", cfg);
  const auto b = BuildTileset(m, {1, 2, 3}, "det", cfg);
  const auto da = TempDir("det_a"), db = TempDir("det_b");
  WriteTilesetDirectory(da, a);
  WriteTilesetDirectory(db, b);
  for (const auto& entry : fs::recursive_directory_iterator(da)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), da);
    std::ifstream fa(entry.path(), std::ios::binary), fb(db / rel, std::ios::binary);
    const std::string sa(std::istreambuf_iterator<char>(fa), {});
    const std::string sb(std::istreambuf_iterator<char>(fb), {});
    EXPECT_EQ(sa, sb) << rel;
  }
  EXPECT_EQ(ReadTilesetDirectory(da), a.tileset);
  EXPECT_TRUE(ValidateTilesetDirectory(da).empty());

  fs::remove(da / "tiles" / "1.gtb");
  auto report = ValidateTilesetDirectory(da);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].kind, ViolationKind::kUnresolvedContent);
  EXPECT_EQ(report[0].tile, 1u);
  fs::remove_all(da);
  fs::remove_all(db);
}

TEST(Builder, ContentUrisCannotEscape) {
  const fs::path dir = "/data/set";
  EXPECT_EQ(ResolveContentUri(dir, "tiles/3.gtb"), dir / "tiles/3.gtb");
  EXPECT_FALSE(ResolveContentUri(dir, "../other/tileset.json"));
  EXPECT_FALSE(ResolveContentUri(dir, "tiles/../../x"));
  EXPECT_FALSE(ResolveContentUri(dir, "/etc/passwd"));
  EXPECT_FALSE(ResolveContentUri(dir, ""));
}

TEST(Builder, Preconditions) {
  EXPECT_EQ(CodeOf([] { BuildTileset(TriangleMesh{}, {}, "x"); }), TilesErrc::kEmptyMesh);
  const auto cube = mesh::UnitCube(true);
  for (const BuildConfig cfg : {BuildConfig{0, 8, 0.3}, BuildConfig{10, 0, 0.3},
                                BuildConfig{10, 8, 0.0}, BuildConfig{10, 8, 1.0}}) {
    EXPECT_EQ(CodeOf([&] { BuildTileset(cube, {}, "x", cfg); }), TilesErrc::kInvalidConfig);
  }
}

}  // namespace
}  // namespace geoshare::tiles
