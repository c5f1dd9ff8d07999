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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "geoshare/common/error.h"
#include "geoshare/common/rw_mutex.h"

namespace geoshare::registry {

enum class RegistryErrc {
  kEmptyNodeId,
  kInvalidNodeId,
  kInvalidBaseUrl,
  kInvalidDataset,
  kUnknownNode,
  kUnknownDataset,
  kNoLiveReplica,
  kInvalidArgument,
  kMalformedLog,
  kIoError,
};

using RegistryError = Error<RegistryErrc>;

const char* ToString(RegistryErrc code);
[[noreturn]] void Fail(RegistryErrc code, const std::string& message);

// Unix seconds; every time-dependent call takes the current time explicitly.
using UnixSeconds = std::int64_t;

inline constexpr UnixSeconds kDefaultHeartbeatInterval = 30;
inline constexpr UnixSeconds kDefaultStalenessWindow = 90;

enum class DatasetKind { kTileset, kVectorLayer, kMedia };

const char* ToString(DatasetKind kind);
std::optional<DatasetKind> ParseDatasetKind(const std::string& text);

struct GeoBbox {
  double lon_min = 0, lat_min = 0, lon_max = 0, lat_max = 0;

  bool IsValid() const;
  friend bool operator==(const GeoBbox&, const GeoBbox&) = default;
};

struct DatasetRecord {
  std::string dataset_id;
  std::string name;
  DatasetKind kind = DatasetKind::kTileset;
  std::optional<GeoBbox> bbox;
  UnixSeconds registered_at = 0;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

// What a node submits; timestamps are assigned by the registry.
struct NodeRegistration {
  std::string node_id;
  std::string base_url;
  std::vector<DatasetRecord> datasets;

  // Throws on an empty or unsafe id, a bad URL or an invalid dataset.
  void Validate() const;
  friend bool operator==(const NodeRegistration&, const NodeRegistration&) = default;
};

struct NodeRecord {
  std::string node_id;
  std::string base_url;
  UnixSeconds registered_at = 0;
  UnixSeconds last_heartbeat = 0;
  std::vector<DatasetRecord> datasets;

  friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

struct CatalogEntry {
  DatasetRecord dataset;
  std::string node_id;
  std::string url;

  friend bool operator==(const CatalogEntry&, const CatalogEntry&) = default;
};

struct Resolution {
  std::string url;
  std::string node_id;

  friend bool operator==(const Resolution&, const Resolution&) = default;
};

// http(s)://host[:port][/path] with no query, fragment or whitespace.
bool IsValidBaseUrl(const std::string& url);
// Ids travel in URL paths, so they are limited to unreserved characters.
bool IsValidId(const std::string& id);

// Where a node serves a dataset of the given kind.
std::string DatasetUrl(const std::string& base_url, const DatasetRecord& dataset);

// Thread-safe registry state. Mutations are serialized; reads take a shared
// lock and may run concurrently. With a log path, every applied mutation is
// appended as one JSON line, and the log is replayed on construction.
class Registry {
 public:
  Registry() = default;
  explicit Registry(const std::filesystem::path& log_path);

  Registry(const Registry&) = delete;
  Registry& operator=(const Registry&) = delete;

  // Upsert by node_id; the dataset list is replaced and all timestamps set to now.
  NodeRecord Register(const NodeRegistration& registration, UnixSeconds now);
  // Returns false when `now` is earlier than the last heartbeat (ignored).
  bool Heartbeat(const std::string& node_id, UnixSeconds now);
  void Deregister(const std::string& node_id);

  std::vector<CatalogEntry> Catalog(UnixSeconds now,
                                    UnixSeconds staleness_window = kDefaultStalenessWindow) const;
  Resolution Resolve(const std::string& dataset_id, UnixSeconds now,
                     UnixSeconds staleness_window = kDefaultStalenessWindow) const;

  std::optional<NodeRecord> Node(const std::string& node_id) const;
  std::vector<NodeRecord> Nodes() const;

 private:
  void Replay(const std::filesystem::path& log_path);
  void Append(const std::string& line);

  mutable RwMutex mutex_;
  std::map<std::string, NodeRecord> nodes_;
  std::ofstream log_;
};

}  // namespace geoshare::registry
