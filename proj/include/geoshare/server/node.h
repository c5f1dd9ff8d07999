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
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geoshare/registry/registry.h"
#include "geoshare/server/layers.h"
#include "geoshare/server/wmts.h"
#include "geoshare/tiles/tileset.h"

namespace geoshare::server {

struct NodeConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path data_dir = ".";
  std::string registry_url;  // empty: run without a registry
  std::string node_id;
  std::string base_url;  // default http://<host>:<bound port>
  std::string wmts_template;
  std::size_t cache_capacity = 1024;
  int heartbeat_interval = 30;  // seconds

  void Validate() const;
};

// Keyed text, one `key = value` per line; `#` starts a comment and values may
// be double-quoted. Keys: host, port, data, registry_url, node_id, base_url,
// wmts_template, cache_capacity, heartbeat_interval.
NodeConfig ParseConfig(const std::string& text, NodeConfig defaults = {});
NodeConfig LoadConfig(const std::filesystem::path& path, NodeConfig defaults = {});

struct StoredFile {
  std::string bytes;
  std::string etag;  // quoted lowercase hex SHA-256
  std::string content_type;
};

std::string Sha256Hex(const std::string& bytes);

// Lower-level helper for conditional GETs: whether If-None-Match matches.
bool EtagMatches(const std::string& if_none_match, const std::string& etag);

struct DatasetEntry {
  std::string dataset_id;
  tiles::Tileset tileset;
  std::map<std::string, StoredFile> files;  // keyed by relative path
  std::vector<Annotation> annotations;
};

// Immutable content loaded at startup from the data directory:
//   datasets/<id>/tileset.json + tiles/   tilesets (or tileset.json at the root)
//   layers/<id>.geojson                   vector layers
//   annotations/<dataset id>.json         annotation tags
class DataStore {
 public:
  static DataStore Load(const std::filesystem::path& data_dir);

  const std::map<std::string, DatasetEntry>& datasets() const { return datasets_; }
  const std::map<std::string, VectorLayer>& layers() const { return layers_; }

  // Raises Forbidden for paths that could leave the dataset, NotFound otherwise.
  const StoredFile& File(const std::string& dataset_id, const std::string& relative) const;
  const VectorLayer& Layer(const std::string& layer_id) const;
  const DatasetEntry& Dataset(const std::string& dataset_id) const;

  // Dataset records announced to the registry.
  std::vector<registry::DatasetRecord> Records() const;

 private:
  std::map<std::string, DatasetEntry> datasets_;
  std::map<std::string, VectorLayer> layers_;
};

// Approximate lon/lat extent of a local east-north-up box in metres.
registry::GeoBbox AnchorExtent(const tiles::GeoAnchor& anchor, const tiles::BoundingBox& box);

// HTTP data node. Serve() registers with the configured registry, heartbeats
// on the configured interval and deregisters when Stop() ends it.
class NodeServer {
 public:
  explicit NodeServer(NodeConfig config, UpstreamFetcher fetch = HttpFetch);
  ~NodeServer();

  int Bind();
  void Serve();
  void Stop();

  const NodeConfig& config() const;
  const DataStore& store() const;
  const WmtsProxy* wmts() const;
  registry::NodeRegistration Registration() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace geoshare::server
