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

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include <gtest/gtest.h>
#include <json.hpp>

// Eigen must precede httplib, whose <resolv.h> defines a `_res` macro.
#include "geoshare/mesh/primitives.h"
#include "geoshare/registry/service.h"
#include "geoshare/server/layers.h"
#include "geoshare/server/node.h"
#include "geoshare/server/wmts.h"
#include "geoshare/tiles/builder.h"
#include "geoshare/tiles/codec.h"

#include <httplib.h>

namespace geoshare::server {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

template <typename F>
ServerErrc CodeOf(F&& f) {
  try {
    f();
  } catch (const ServerError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no ServerError thrown";
  return ServerErrc::kIoError;
}

// ------------------------------------------------------------------ wmts

TEST(Wmts, Examples) {
  EXPECT_EQ(WmtsTileBbox({0, 0, 0}), (LonLatBox{-180, -90, 0, 90}));
  EXPECT_EQ(WmtsTileBbox({0, 0, 1}), (LonLatBox{0, -90, 180, 90}));
  EXPECT_EQ(WmtsTileBbox({1, 0, 0}), (LonLatBox{-180, 0, -90, 90}));
  EXPECT_EQ(WmtsTileBbox({1, 1, 3}), (LonLatBox{90, -90, 180, 0}));
  EXPECT_EQ(CodeOf([] { WmtsTileBbox({0, 0, 2}); }), ServerErrc::kAddressOutOfRange);
  EXPECT_EQ(CodeOf([] { WmtsTileBbox({0, 1, 0}); }), ServerErrc::kAddressOutOfRange);
  EXPECT_EQ(CodeOf([] { WmtsTileBbox({-1, 0, 0}); }), ServerErrc::kAddressOutOfRange);
  EXPECT_EQ(CodeOf([] { WmtsTileBbox({3, -1, 0}); }), ServerErrc::kAddressOutOfRange);
  EXPECT_EQ(LonLatToWmts(-180, 90, 0), (WmtsAddress{0, 0, 0}));
  EXPECT_EQ(CodeOf([] { LonLatToWmts(0, 95, 3); }), ServerErrc::kCoordinateOutOfRange);
  EXPECT_EQ(CodeOf([] { LonLatToWmts(180, 0, 3); }), ServerErrc::kCoordinateOutOfRange);
  EXPECT_EQ(CodeOf([] { LonLatToWmts(0, -90, 3); }), ServerErrc::kCoordinateOutOfRange);
}

TEST(Wmts, TilesPartitionTheGlobeUpToZoom6) {
  for (int z = 0; z <= 6; ++z) {
    const std::int64_t rows = std::int64_t{1} << z, cols = 2 * rows;
    std::vector<LonLatBox> boxes;
    double area = 0.0;
    for (std::int64_t r = 0; r < rows; ++r) {
      for (std::int64_t c = 0; c < cols; ++c) {
        const auto b = WmtsTileBbox({z, r, c});
        // Edges as exact rationals of the grid.
        EXPECT_EQ(b.lon_min, -180.0 + 360.0 * static_cast<double>(c) / static_cast<double>(cols));
        EXPECT_EQ(b.lon_max, -180.0 + 360.0 * static_cast<double>(c + 1) / static_cast<double>(cols));
        EXPECT_EQ(b.lat_max, 90.0 - 180.0 * static_cast<double>(r) / static_cast<double>(rows));
        EXPECT_EQ(b.lat_min, 90.0 - 180.0 * static_cast<double>(r + 1) / static_cast<double>(rows));
        ASSERT_GE(b.lon_min, -180.0);
        ASSERT_LE(b.lon_max, 180.0);
        ASSERT_GE(b.lat_min, -90.0);
        ASSERT_LE(b.lat_max, 90.0);
        area += (b.lon_max - b.lon_min) * (b.lat_max - b.lat_min);
        boxes.push_back(b);
      }
    }
    EXPECT_EQ(area, 360.0 * 180.0) << z;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      for (std::size_t j = i + 1; j < boxes.size(); ++j) {
        const auto& a = boxes[i];
        const auto& b = boxes[j];
        const bool overlap = a.lon_min < b.lon_max && b.lon_min < a.lon_max &&
                             a.lat_min < b.lat_max && b.lat_min < a.lat_max;
        ASSERT_FALSE(overlap) << "z " << z << " tiles " << i << ", " << j;
      }
    }
  }
}

TEST(Wmts, TileCentersRoundTripUpToZoom8) {
  for (int z = 0; z <= 8; ++z) {
    const std::int64_t rows = std::int64_t{1} << z;
    for (std::int64_t r = 0; r < rows; ++r) {
      for (std::int64_t c = 0; c < 2 * rows; ++c) {
        const auto b = WmtsTileBbox({z, r, c});
        ASSERT_EQ(LonLatToWmts((b.lon_min + b.lon_max) / 2, (b.lat_min + b.lat_max) / 2, z),
                  (WmtsAddress{z, r, c}));
      }
    }
  }
}

TEST(Wmts, PointsLandInExactlyOneTile) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lon(-180.0, 180.0), lat(-90.0, 90.0);
  for (int z = 0; z <= 4; ++z) {
    const std::int64_t rows = std::int64_t{1} << z;
    for (int i = 0; i < 300; ++i) {
      double x = lon(rng), y = lat(rng);
      if (i % 3 == 0) {  // snap onto tile edges to probe the half-open rule
        const double w = 180.0 / static_cast<double>(rows);
        x = -180.0 + w * std::floor((x + 180.0) / w);
        y = 90.0 - w * std::floor((90.0 - y) / w);
        if (y <= -90.0) y += w;
      }
      int hits = 0;
      WmtsAddress owner;
      for (std::int64_t r = 0; r < rows; ++r) {
        for (std::int64_t c = 0; c < 2 * rows; ++c) {
          const auto b = WmtsTileBbox({z, r, c});
          if (b.lon_min <= x && x < b.lon_max && b.lat_min < y && y <= b.lat_max) {
            ++hits;
            owner = {z, r, c};
          }
        }
      }
      ASSERT_EQ(hits, 1) << x << ", " << y;
      ASSERT_EQ(LonLatToWmts(x, y, z), owner);
    }
  }
}

// ----------------------------------------------------------------- cache

TEST(TileCache, EvictsLeastRecentlyUsed) {
  TileCache cache(3);
  int loads = 0;
  const auto load = [&](std::string v) {
    return [&loads, v] {
      ++loads;
      return TileBlob{v, "text/plain"};
    };
  };
  cache.GetOrLoad("a", load("A"));
  cache.GetOrLoad("b", load("B"));
  cache.GetOrLoad("c", load("C"));
  EXPECT_EQ(cache.GetOrLoad("a", load("x"))->bytes, "A");  // hit refreshes a
  cache.GetOrLoad("d", load("D"));
  EXPECT_EQ(loads, 4);
  EXPECT_EQ(cache.size(), 3u);
  EXPECT_EQ(cache.Peek("b"), nullptr);
  EXPECT_NE(cache.Peek("a"), nullptr);
  cache.GetOrLoad("e", load("E"));
  EXPECT_EQ(cache.Peek("c"), nullptr);
  EXPECT_EQ(CodeOf([] { TileCache bad(0); }), ServerErrc::kInvalidConfig);
}

TEST(TileCache, ConcurrentMissesShareOneLoad) {
  TileCache cache(8);
  std::atomic<int> loads = 0;
  std::vector<std::thread> threads;
  std::vector<std::string> seen(16);
  for (int i = 0; i < 16; ++i) {
    threads.emplace_back([&, i] {
      seen[i] = cache.GetOrLoad("k", [&] {
                       ++loads;
                       std::this_thread::sleep_for(std::chrono::milliseconds(100));
                       return TileBlob{"payload", "image/png"};
                     })->bytes;
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(loads.load(), 1);
  for (const auto& s : seen) EXPECT_EQ(s, "payload");
}

TEST(TileCache, FailuresAreNotCached) {
  TileCache cache(2);
  int calls = 0;
  const auto failing = [&]() -> TileBlob {
    ++calls;
    throw std::runtime_error("boom");
  };
  EXPECT_THROW(cache.GetOrLoad("k", failing), std::runtime_error);
  EXPECT_THROW(cache.GetOrLoad("k", failing), std::runtime_error);
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(cache.size(), 0u);
}

struct FakeUpstream {
  std::atomic<int> calls = 0;
  int status = 200;
  std::vector<std::string> urls;
  std::mutex mutex;

  UpstreamFetcher Fetcher() {
    return [this](const std::string& url) {
      ++calls;
      std::lock_guard lock(mutex);
      urls.push_back(url);
      return UpstreamResponse{status, "tile:" + url, "image/png"};
    };
  }
};

TEST(WmtsProxy, CachesUpstreamBytes) {
  FakeUpstream up;
  WmtsProxy proxy("http://up.example/{layer}/{z}/{y}/{x}.png", 4, up.Fetcher());
  const auto first = proxy.Get("img", {3, 2, 5});
  EXPECT_EQ(first->bytes, "tile:http://up.example/img/3/2/5.png");
  EXPECT_EQ(first->content_type, "image/png");
  const auto second = proxy.Get("img", {3, 2, 5});
  EXPECT_EQ(up.calls.load(), 1);
  EXPECT_EQ(second->bytes, first->bytes);
  proxy.Get("other", {3, 2, 5});
  EXPECT_EQ(up.calls.load(), 2);
  EXPECT_EQ(CodeOf([&] { proxy.Get("img", {0, 0, 2}); }), ServerErrc::kAddressOutOfRange);
  EXPECT_EQ(up.calls.load(), 2);
}

TEST(WmtsProxy, UpstreamErrorsAreReported) {
  FakeUpstream up;
  up.status = 500;
  WmtsProxy proxy("http://up.example/{z}/{y}/{x}", 4, up.Fetcher());
  EXPECT_EQ(CodeOf([&] { proxy.Get("img", {0, 0, 0}); }), ServerErrc::kUpstreamUnavailable);
  up.status = 200;
  EXPECT_EQ(proxy.Get("img", {0, 0, 0})->bytes, "tile:http://up.example/0/0/0");
  WmtsProxy unreachable("http://127.0.0.1:9/{z}/{y}/{x}", 4);
  EXPECT_EQ(CodeOf([&] { unreachable.Get("img", {0, 0, 0}); }), ServerErrc::kUpstreamUnavailable);
}

TEST(WmtsProxy, TemplateExpandsEnvironment) {
  ::setenv("GEOSHARE_TEST_TK", "secret", 1);
  EXPECT_EQ(ExpandTemplate("https://t.example/w?l={layer}&z={z}&r={y}&c={x}&tk=${GEOSHARE_TEST_TK}",
                           "vec", {7, 11, 13}),
            "https://t.example/w?l=vec&z=7&r=11&c=13&tk=secret");
  EXPECT_EQ(CodeOf([] { ExpandTemplate("${OOPS", "a", {}); }), ServerErrc::kInvalidConfig);
}

// ---------------------------------------------------------------- layers

json Collection(const std::vector<json>& features) {
  return {{"type", "FeatureCollection"}, {"features", features}};
}

json PointFeature(const json& id, double lon, double lat, json props = json::object()) {
  return {{"type", "Feature"},
          {"id", id},
          {"geometry", {{"type", "Point"}, {"coordinates", {lon, lat}}}},
          {"properties", props}};
}

TEST(VectorLayer, QueriesByIntersection) {
  json polygon = {{"type", "Feature"},
                  {"id", "p"},
                  {"geometry",
                   {{"type", "Polygon"},
                    {"coordinates", {{{9, 9}, {12, 9}, {12, 12}, {9, 12}, {9, 9}}}}}},
                  {"properties", {{"unit", "Jurassic sandstone"}, {"age_ma", 160.5}}}};
  const auto layer = VectorLayer::FromGeoJson(
      "geo", Collection({PointFeature("b", 5, 5, {{"name", "spring"}}), polygon,
                         PointFeature(7, 50, 50)}));
  auto hits = layer.Query({0, 0, 10, 10});
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0]->feature_id, "b");
  EXPECT_EQ(hits[0]->attributes.at("name"), "spring");
  EXPECT_EQ(hits[1]->feature_id, "p");  // straddles the edge
  EXPECT_EQ(hits[1]->attributes.at("unit"), "Jurassic sandstone");
  EXPECT_EQ(hits[1]->attributes.at("age_ma"), "160.5");
  EXPECT_TRUE(layer.Query({-100, -80, -90, -70}).empty());
  EXPECT_EQ(layer.Query({-180, -90, 180, 90}).size(), 3u);
  EXPECT_EQ(layer.Extent(), (LonLatBox{5, 5, 50, 50}));
  EXPECT_EQ(CodeOf([&] { layer.Query({10, 0, 0, 10}); }), ServerErrc::kInvalidBbox);

  const auto fc = ToFeatureCollection(hits);
  EXPECT_EQ(fc.at("features").at(1).at("geometry"), polygon.at("geometry"));
}

TEST(VectorLayer, MatchesBruteForceOnRandomLayers) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> lon(-170, 170), lat(-80, 80), size(0, 8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<json> features;
    std::vector<LonLatBox> extents;
    for (int i = 0; i < 50; ++i) {
      const double x = lon(rng), y = lat(rng), w = size(rng), h = size(rng);
      features.push_back({{"type", "Feature"},
                          {"id", "f" + std::to_string(i)},
                          {"geometry", {{"type", "LineString"}, {"coordinates", {{x, y}, {x + w, y + h}}}}},
                          {"properties", json::object()}});
      extents.push_back({x, y, x + w, y + h});
    }
    const auto layer = VectorLayer::FromGeoJson("r", Collection(features));
    for (int q = 0; q < 20; ++q) {
      const double x = lon(rng), y = lat(rng);
      const LonLatBox box{x, y, std::min(180.0, x + 4 * size(rng)), std::min(90.0, y + 4 * size(rng))};
      std::set<std::string> want;
      for (int i = 0; i < 50; ++i) {
        const auto& e = extents[i];
        if (!(e.lon_max < box.lon_min || box.lon_max < e.lon_min || e.lat_max < box.lat_min ||
              box.lat_max < e.lat_min)) {
          want.insert("f" + std::to_string(i));
        }
      }
      std::vector<std::string> got;
      for (const auto* f : layer.Query(box)) got.push_back(f->feature_id);
      EXPECT_EQ(got, std::vector<std::string>(want.begin(), want.end()));
    }
  }
}

TEST(VectorLayer, RejectsBadInput) {
  EXPECT_EQ(CodeOf([] { VectorLayer::FromGeoJson("x", json::object()); }), ServerErrc::kInvalidLayer);
  EXPECT_EQ(CodeOf([] {
              VectorLayer::FromGeoJson("x", Collection({PointFeature("a", 1, 1), PointFeature("a", 2, 2)}));
            }),
            ServerErrc::kInvalidLayer);
  EXPECT_EQ(CodeOf([] { VectorLayer::FromGeoJson("x", Collection({PointFeature("a", 200, 1)})); }),
            ServerErrc::kInvalidLayer);
  auto no_id = PointFeature("a", 1, 1);
  no_id.erase("id");
  EXPECT_EQ(CodeOf([&] { VectorLayer::FromGeoJson("x", Collection({no_id})); }),
            ServerErrc::kInvalidLayer);
}

TEST(BboxParam, Parsing) {
  EXPECT_EQ(ParseBboxParam("-10.5,20,30,40.25"), (LonLatBox{-10.5, 20, 30, 40.25}));
  for (const char* bad : {"", "1,2,3", "1,2,3,4,5", "a,b,c,d", "1,2,3,", "10,0,0,10", "0,0,190,10"}) {
    EXPECT_EQ(CodeOf([&] { ParseBboxParam(bad); }), ServerErrc::kInvalidBbox) << bad;
  }
}

TEST(Annotations, ParseAndValidateAnchors) {
  const tiles::BoundingBox box{{0, 0, 0}, {10, 10, 5}};
  const json doc = json::parse(R"({"tags":[
      {"tag_kind":"phenomenon","anchor":[1,2,3],"title":"Fold","body":"Anticline","media":["a.jpg"]},
      {"tag_kind":"data","anchor":[-10,10,-5],"title":"Core"}]})");
  const auto tags = ParseAnnotations("d", doc, box);
  ASSERT_EQ(tags.size(), 2u);
  EXPECT_EQ(tags[0].tag_kind, TagKind::kPhenomenon);
  EXPECT_EQ(tags[0].media, std::vector<std::string>{"a.jpg"});
  EXPECT_EQ(tags[1].tag_kind, TagKind::kData);
  EXPECT_EQ(ParseAnnotations("d", ToJson(tags), box), tags);
  EXPECT_EQ(CodeOf([&] {
              ParseAnnotations("d", json::parse(R"({"tags":[{"tag_kind":"x","anchor":[0,0,0],"title":"t"}]})"), box);
            }),
            ServerErrc::kInvalidAnnotation);
  EXPECT_EQ(CodeOf([&] {
              ParseAnnotations("d", json::parse(R"({"tags":[{"tag_kind":"data","anchor":[0,0,6],"title":"t"}]})"), box);
            }),
            ServerErrc::kInvalidAnnotation);
}

// ------------------------------------------------------ config and hashes

TEST(Config, ParsesKeyedText) {
  const auto c = ParseConfig(R"(# node settings
port = 9001
data = "/srv/geo data"   # quoted
registry_url = http://127.0.0.1:8090
node_id = univ-a
base_url = "http://node-a.example:9001"
wmts_template = "https://t{s}.example/{z}/{y}/{x}?tk=${TK}"
cache_capacity = 64
heartbeat_interval = 5
)");
  EXPECT_EQ(c.port, 9001);
  EXPECT_EQ(c.data_dir, "/srv/geo data");
  EXPECT_EQ(c.registry_url, "http://127.0.0.1:8090");
  EXPECT_EQ(c.node_id, "univ-a");
  EXPECT_EQ(c.base_url, "http://node-a.example:9001");
  EXPECT_EQ(c.wmts_template, "https://t{s}.example/{z}/{y}/{x}?tk=${TK}");
  EXPECT_EQ(c.cache_capacity, 64u);
  EXPECT_EQ(c.heartbeat_interval, 5);
  for (const char* bad : {"colour = red", "port = eighty", "port = 70000", "port",
                          "registry_url = http://r:1", "heartbeat_interval = 0",
                          "data = \"unterminated", "base_url = nope"}) {
    EXPECT_EQ(CodeOf([&] { ParseConfig(bad); }), ServerErrc::kInvalidConfig) << bad;
  }
}

TEST(Hashing, Sha256KnownVectors) {
  EXPECT_EQ(Sha256Hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(Sha256Hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_TRUE(EtagMatches("\"x\"", "\"x\""));
  EXPECT_TRUE(EtagMatches("\"a\", W/\"x\"", "\"x\""));
  EXPECT_TRUE(EtagMatches("*", "\"x\""));
  EXPECT_FALSE(EtagMatches("\"y\"", "\"x\""));
  EXPECT_FALSE(EtagMatches("x", "\"x\""));
}

// -------------------------------------------------------------------- node

fs::path MakeDataDir(const std::string& name, tiles::BuiltTileset* built_out = nullptr) {
  const fs::path dir = fs::temp_directory_path() / ("geoshare_server_" + name);
  fs::remove_all(dir);
  tiles::BuildConfig cfg;
  cfg.max_triangles_per_leaf = 80;
  auto built = tiles::BuildTileset(mesh::Icosphere(2, 50.0), {104.06, 30.67, 500.0}, "demo", cfg);
  tiles::WriteTilesetDirectory(dir / "datasets" / "demo", built);
  fs::create_directories(dir / "layers");
  std::ofstream(dir / "layers" / "geology.geojson")
      << Collection({PointFeature("s1", 104.05, 30.66, {{"kind", "spring"}}),
                     PointFeature("s2", 120.0, 10.0)})
             .dump();
  fs::create_directories(dir / "annotations");
  std::ofstream(dir / "annotations" / "demo.json")
      << R"({"tags":[{"tag_kind":"phenomenon","anchor":[0,0,49],"title":"Summit","body":"b","media":[]}]})";
  if (built_out) *built_out = std::move(built);
  return dir;
}

std::string ReadAll(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class NodeTest : public ::testing::Test {
 protected:
  void Start(NodeConfig config) {
    node_ = std::make_unique<NodeServer>(std::move(config), upstream_.Fetcher());
    port_ = node_->Bind();
    thread_ = std::thread([this] { node_->Serve(); });
    http_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override {
    if (node_) node_->Stop();
    if (thread_.joinable()) thread_.join();
  }

  FakeUpstream upstream_;
  std::unique_ptr<NodeServer> node_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> http_;
};

TEST_F(NodeTest, ServesDatasetsLayersAndTiles) {
  tiles::BuiltTileset built;
  const auto dir = MakeDataDir("serve", &built);
  NodeConfig cfg;
  cfg.port = 0;
  cfg.data_dir = dir;
  cfg.wmts_template = "http://up.example/{layer}/{z}/{y}/{x}.png";
  Start(cfg);

  auto res = http_->Get("/api/v1/datasets");
  ASSERT_TRUE(res);
  EXPECT_EQ(json::parse(res->body), json::parse(R"({"datasets":[
      {"dataset_id":"demo","name":"demo","kind":"tileset"},
      {"dataset_id":"geology","name":"geology","kind":"vector_layer"}]})"));

  const std::string manifest = ReadAll(dir / "datasets/demo/tileset.json");
  res = http_->Get("/api/v1/datasets/demo/tileset.json");
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, manifest);
  EXPECT_EQ(res->get_header_value("Content-Type"), "application/json");
  const std::string etag = "\"" + Sha256Hex(manifest) + "\"";
  EXPECT_EQ(res->get_header_value("ETag"), etag);
  res = http_->Get("/api/v1/datasets/demo/tileset.json", {{"If-None-Match", etag}});
  EXPECT_EQ(res->status, 304);
  EXPECT_TRUE(res->body.empty());
  EXPECT_EQ(http_->Get("/api/v1/datasets/demo/tileset.json", {{"If-None-Match", "\"other\""}})->status, 200);

  for (const auto& content : built.contents) {
    res = http_->Get("/api/v1/datasets/demo/" + content.uri);
    ASSERT_EQ(res->status, 200) << content.uri;
    EXPECT_EQ(res->get_header_value("Content-Type"), "application/octet-stream");
    const std::vector<std::uint8_t> bytes(res->body.begin(), res->body.end());
    EXPECT_EQ(tiles::DecodeTile(bytes), content.mesh);
  }
  EXPECT_EQ(http_->Get("/api/v1/datasets/demo/tiles/999.gtb")->status, 404);
  EXPECT_EQ(http_->Get("/api/v1/datasets/nope/tileset.json")->status, 404);
  EXPECT_EQ(http_->Get("/api/v1/datasets/demo/tiles/../../etc")->status, 403);
  EXPECT_EQ(http_->Get("/api/v1/datasets/demo/tiles/%2e%2e/%2e%2e/etc/passwd")->status, 403);
  EXPECT_EQ(http_->Get("/api/v1/datasets/demo/./tileset.json")->status, 403);

  res = http_->Get("/api/v1/layers/geology/features?bbox=104,30,105,31");
  EXPECT_EQ(res->status, 200);
  const auto fc = json::parse(res->body);
  ASSERT_EQ(fc.at("features").size(), 1u);
  EXPECT_EQ(fc["features"][0]["properties"]["kind"], "spring");
  EXPECT_EQ(http_->Get("/api/v1/layers/geology/features?bbox=1,2")->status, 400);
  EXPECT_EQ(http_->Get("/api/v1/layers/none/features?bbox=0,0,1,1")->status, 404);

  res = http_->Get("/api/v1/annotations/demo");
  EXPECT_EQ(json::parse(res->body).at("tags").at(0).at("title"), "Summit");
  EXPECT_EQ(http_->Get("/api/v1/annotations/nope")->status, 404);

  res = http_->Get("/api/v1/wmts/img/2/1/3.png");
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, "tile:http://up.example/img/2/1/3.png");
  EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");
  http_->Get("/api/v1/wmts/img/2/1/3.png");
  EXPECT_EQ(upstream_.calls.load(), 1);
  EXPECT_EQ(http_->Get("/api/v1/wmts/img/2/4/0.png")->status, 400);
  upstream_.status = 503;
  EXPECT_EQ(http_->Get("/api/v1/wmts/img/2/0/0.png")->status, 502);
  fs::remove_all(dir);
}

TEST_F(NodeTest, RegistersHeartbeatsAndDeregisters) {
  registry::Registry registry;
  registry::RegistryService service(registry);
  const int registry_port = service.Bind("127.0.0.1", 0);
  std::thread registry_thread([&] { service.Serve(); });

  const auto dir = MakeDataDir("lifecycle");
  NodeConfig cfg;
  cfg.port = 0;
  cfg.data_dir = dir;
  cfg.registry_url = "http://127.0.0.1:" + std::to_string(registry_port);
  cfg.node_id = "node-a";
  cfg.heartbeat_interval = 1;
  Start(cfg);

  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
  while (registry.Catalog(registry::SystemClock()).empty() &&
         std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  const auto catalog = registry.Catalog(registry::SystemClock());
  ASSERT_EQ(catalog.size(), 2u);
  EXPECT_EQ(catalog[0].dataset.dataset_id, "demo");
  EXPECT_EQ(catalog[0].url,
            "http://127.0.0.1:" + std::to_string(port_) + "/api/v1/datasets/demo/tileset.json");
  ASSERT_TRUE(catalog[0].dataset.bbox.has_value());
  EXPECT_NEAR(catalog[0].dataset.bbox->lon_min, 104.06 - 50.0 / (111320.0 * std::cos(30.67 * M_PI / 180)), 1e-6);
  EXPECT_EQ(catalog[1].dataset.kind, registry::DatasetKind::kVectorLayer);

  // Forgotten by the registry: the next heartbeat re-registers.
  registry.Deregister("node-a");
  const auto again = std::chrono::steady_clock::now() + std::chrono::seconds(10);
  while (!registry.Node("node-a") && std::chrono::steady_clock::now() < again) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  EXPECT_TRUE(registry.Node("node-a").has_value());

  node_->Stop();
  thread_.join();
  EXPECT_FALSE(registry.Node("node-a").has_value());
  service.Stop();
  registry_thread.join();
  fs::remove_all(dir);
}

TEST(DataStore, SingleTilesetRootAndErrors) {
  const fs::path dir = fs::temp_directory_path() / "geoshare_server_single";
  fs::remove_all(dir);
  auto built = tiles::BuildTileset(mesh::UnitCube(true), {}, "cube-set");
  tiles::WriteTilesetDirectory(dir, built);
  const auto store = DataStore::Load(dir);
  ASSERT_EQ(store.datasets().count("cube-set"), 1u);
  EXPECT_EQ(CodeOf([&] { store.File("cube-set", "/etc/passwd"); }), ServerErrc::kForbidden);
  EXPECT_EQ(CodeOf([&] { store.File("cube-set", "tiles//0.gtb"); }), ServerErrc::kForbidden);
  EXPECT_EQ(CodeOf([&] { store.File("cube-set", "tiles\\0.gtb"); }), ServerErrc::kForbidden);
  EXPECT_NO_THROW(store.File("cube-set", "tiles/0.gtb"));
  EXPECT_EQ(CodeOf([] { DataStore::Load("/nonexistent/geoshare"); }), ServerErrc::kIoError);

  fs::create_directories(dir / "annotations");
  std::ofstream(dir / "annotations" / "ghost.json") << R"({"tags":[]})";
  EXPECT_EQ(CodeOf([&] { DataStore::Load(dir); }), ServerErrc::kInvalidAnnotation);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace geoshare::server
