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

#include "geoshare/registry/registry.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <mutex>
#include <shared_mutex>
#include <sstream>

#include <json.hpp>

#include "geoshare/registry/wire.h"

namespace geoshare::registry {
namespace {

using nlohmann::json;

bool IsHostChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_';
}

std::string TrimSlash(std::string url) {
  while (!url.empty() && url.back() == '/') url.pop_back();
  return url;
}

// Winner among claims: later registration, then smaller node id.
bool Beats(const DatasetRecord& a, const std::string& node_a, const DatasetRecord& b,
           const std::string& node_b) {
  if (a.registered_at != b.registered_at) return a.registered_at > b.registered_at;
  return node_a < node_b;
}

bool IsLive(const NodeRecord& node, UnixSeconds now, UnixSeconds window) {
  return now - node.last_heartbeat <= window;
}

void CheckWindow(UnixSeconds window) {
  if (window <= 0) Fail(RegistryErrc::kInvalidArgument, "staleness window must be positive");
}

}  // namespace

const char* ToString(RegistryErrc code) {
  switch (code) {
    case RegistryErrc::kEmptyNodeId: return "EmptyNodeId";
    case RegistryErrc::kInvalidNodeId: return "InvalidNodeId";
    case RegistryErrc::kInvalidBaseUrl: return "InvalidBaseUrl";
    case RegistryErrc::kInvalidDataset: return "InvalidDataset";
    case RegistryErrc::kUnknownNode: return "UnknownNode";
    case RegistryErrc::kUnknownDataset: return "UnknownDataset";
    case RegistryErrc::kNoLiveReplica: return "NoLiveReplica";
    case RegistryErrc::kInvalidArgument: return "InvalidArgument";
    case RegistryErrc::kMalformedLog: return "MalformedLog";
    case RegistryErrc::kIoError: return "IoError";
  }
  return "Unknown";
}

void Fail(RegistryErrc code, const std::string& message) {
  throw RegistryError(code, std::string("registry: ") + ToString(code) + ": " + message);
}

const char* ToString(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kTileset: return "tileset";
    case DatasetKind::kVectorLayer: return "vector_layer";
    case DatasetKind::kMedia: return "media";
  }
  return "unknown";
}

std::optional<DatasetKind> ParseDatasetKind(const std::string& text) {
  for (const auto kind : {DatasetKind::kTileset, DatasetKind::kVectorLayer, DatasetKind::kMedia}) {
    if (text == ToString(kind)) return kind;
  }
  return std::nullopt;
}

bool GeoBbox::IsValid() const {
  const auto in = [](double v, double limit) { return std::isfinite(v) && std::abs(v) <= limit; };
  return in(lon_min, 180) && in(lon_max, 180) && in(lat_min, 90) && in(lat_max, 90) &&
         lon_min <= lon_max && lat_min <= lat_max;
}

bool IsValidBaseUrl(const std::string& url) {
  std::size_t pos = 0;
  if (url.rfind("http://", 0) == 0) {
    pos = 7;
  } else if (url.rfind("https://", 0) == 0) {
    pos = 8;
  } else {
    return false;
  }
  const std::size_t host_begin = pos;
  if (pos < url.size() && url[pos] == '[') {
    const auto close = url.find(']', pos);
    if (close == std::string::npos || close == pos + 1) return false;
    for (std::size_t i = pos + 1; i < close; ++i) {
      if (!std::isxdigit(static_cast<unsigned char>(url[i])) && url[i] != ':') return false;
    }
    pos = close + 1;
  } else {
    while (pos < url.size() && IsHostChar(url[pos])) ++pos;
    if (pos == host_begin) return false;
    const std::string host = url.substr(host_begin, pos - host_begin);
    if (host.front() == '.' || host.back() == '.' || host.find("..") != std::string::npos) {
      return false;
    }
  }
  if (pos < url.size() && url[pos] == ':') {
    const std::size_t digits = ++pos;
    while (pos < url.size() && std::isdigit(static_cast<unsigned char>(url[pos]))) ++pos;
    if (pos == digits || pos - digits > 5) return false;
    const int port = std::stoi(url.substr(digits, pos - digits));
    if (port < 1 || port > 65535) return false;
  }
  if (pos == url.size()) return true;
  if (url[pos] != '/') return false;
  return std::none_of(url.begin() + pos, url.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || std::iscntrl(static_cast<unsigned char>(c)) ||
           c == '?' || c == '#';
  });
}

bool IsValidId(const std::string& id) {
  return !id.empty() && id.size() <= 256 && std::all_of(id.begin(), id.end(), [](char c) {
           return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
                  c == '.' || c == '~';
         }) && id != "." && id != "..";
}

std::string DatasetUrl(const std::string& base_url, const DatasetRecord& dataset) {
  const std::string base = TrimSlash(base_url);
  switch (dataset.kind) {
    case DatasetKind::kTileset:
      return base + "/api/v1/datasets/" + dataset.dataset_id + "/tileset.json";
    case DatasetKind::kVectorLayer:
      return base + "/api/v1/layers/" + dataset.dataset_id + "/features";
    case DatasetKind::kMedia:
      return base + "/api/v1/annotations/" + dataset.dataset_id;
  }
  return base;
}

void NodeRegistration::Validate() const {
  if (node_id.empty()) Fail(RegistryErrc::kEmptyNodeId, "node_id is empty");
  if (!IsValidId(node_id)) Fail(RegistryErrc::kInvalidNodeId, "node_id '" + node_id + "'");
  if (!IsValidBaseUrl(base_url)) Fail(RegistryErrc::kInvalidBaseUrl, "'" + base_url + "'");
  std::vector<std::string> ids;
  for (const auto& d : datasets) {
    if (d.dataset_id.empty()) Fail(RegistryErrc::kInvalidDataset, "dataset_id is empty");
    if (!IsValidId(d.dataset_id)) {
      Fail(RegistryErrc::kInvalidDataset, "dataset_id '" + d.dataset_id + "'");
    }
    if (d.bbox && !d.bbox->IsValid()) {
      Fail(RegistryErrc::kInvalidDataset, "bbox of '" + d.dataset_id + "' is out of range");
    }
    ids.push_back(d.dataset_id);
  }
  std::sort(ids.begin(), ids.end());
  if (const auto dup = std::adjacent_find(ids.begin(), ids.end()); dup != ids.end()) {
    Fail(RegistryErrc::kInvalidDataset, "dataset_id '" + *dup + "' listed twice");
  }
}

Registry::Registry(const std::filesystem::path& log_path) {
  Replay(log_path);
  log_.open(log_path, std::ios::app | std::ios::binary);
  if (!log_) Fail(RegistryErrc::kIoError, "cannot open " + log_path.string());
}

NodeRecord Registry::Register(const NodeRegistration& registration, UnixSeconds now) {
  registration.Validate();
  NodeRecord record;
  record.node_id = registration.node_id;
  record.base_url = registration.base_url;
  record.registered_at = record.last_heartbeat = now;
  record.datasets = registration.datasets;
  for (auto& d : record.datasets) d.registered_at = now;

  std::unique_lock lock(mutex_);
  nodes_[record.node_id] = record;
  Append(json{{"event", "register"}, {"time", now}, {"node", ToJson(registration)}}.dump());
  return record;
}

bool Registry::Heartbeat(const std::string& node_id, UnixSeconds now) {
  std::unique_lock lock(mutex_);
  const auto it = nodes_.find(node_id);
  if (it == nodes_.end()) Fail(RegistryErrc::kUnknownNode, "'" + node_id + "'");
  if (now < it->second.last_heartbeat) return false;
  it->second.last_heartbeat = now;
  Append(json{{"event", "heartbeat"}, {"time", now}, {"node_id", node_id}}.dump());
  return true;
}

void Registry::Deregister(const std::string& node_id) {
  std::unique_lock lock(mutex_);
  if (nodes_.erase(node_id) == 0) Fail(RegistryErrc::kUnknownNode, "'" + node_id + "'");
  Append(json{{"event", "deregister"}, {"node_id", node_id}}.dump());
}

std::vector<CatalogEntry> Registry::Catalog(UnixSeconds now, UnixSeconds staleness_window) const {
  CheckWindow(staleness_window);
  std::shared_lock lock(mutex_);
  std::map<std::string, CatalogEntry> winners;
  for (const auto& [id, node] : nodes_) {
    if (!IsLive(node, now, staleness_window)) continue;
    for (const auto& d : node.datasets) {
      const auto it = winners.find(d.dataset_id);
      if (it == winners.end() || Beats(d, id, it->second.dataset, it->second.node_id)) {
        winners[d.dataset_id] = {d, id, DatasetUrl(node.base_url, d)};
      }
    }
  }
  std::vector<CatalogEntry> out;
  out.reserve(winners.size());
  for (auto& [id, entry] : winners) out.push_back(std::move(entry));
  return out;
}

Resolution Registry::Resolve(const std::string& dataset_id, UnixSeconds now,
                             UnixSeconds staleness_window) const {
  CheckWindow(staleness_window);
  std::shared_lock lock(mutex_);
  bool claimed = false;
  const DatasetRecord* best = nullptr;
  const NodeRecord* owner = nullptr;
  for (const auto& [id, node] : nodes_) {
    for (const auto& d : node.datasets) {
      if (d.dataset_id != dataset_id) continue;
      claimed = true;
      if (!IsLive(node, now, staleness_window)) continue;
      if (best == nullptr || Beats(d, id, *best, owner->node_id)) {
        best = &d;
        owner = &node;
      }
    }
  }
  if (!claimed) Fail(RegistryErrc::kUnknownDataset, "'" + dataset_id + "'");
  if (best == nullptr) Fail(RegistryErrc::kNoLiveReplica, "'" + dataset_id + "'");
  return {DatasetUrl(owner->base_url, *best), owner->node_id};
}

std::optional<NodeRecord> Registry::Node(const std::string& node_id) const {
  std::shared_lock lock(mutex_);
  const auto it = nodes_.find(node_id);
  if (it == nodes_.end()) return std::nullopt;
  return it->second;
}

std::vector<NodeRecord> Registry::Nodes() const {
  std::shared_lock lock(mutex_);
  std::vector<NodeRecord> out;
  for (const auto& [id, node] : nodes_) out.push_back(node);
  return out;
}

void Registry::Append(const std::string& line) {
  if (!log_.is_open()) return;
  log_ << line << '\n';
  log_.flush();
  if (!log_) Fail(RegistryErrc::kIoError, "event log write failed");
}

void Registry::Replay(const std::filesystem::path& log_path) {
  std::ifstream in(log_path, std::ios::binary);
  if (!in) return;
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  // An unterminated final line is an interrupted append; it is dropped.
  in.clear();
  in.seekg(0, std::ios::end);
  const bool terminated = in.tellg() == 0 || [&] {
    in.seekg(-1, std::ios::end);
    return in.get() == '\n';
  }();
  if (!terminated && !lines.empty()) lines.pop_back();

  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string where = log_path.string() + ":" + std::to_string(i + 1);
    try {
      const json event = json::parse(lines[i]);
      const std::string kind = event.at("event").get<std::string>();
      if (kind == "register") {
        Register(ParseRegistration(event.at("node")), event.at("time").get<UnixSeconds>());
      } else if (kind == "heartbeat") {
        Heartbeat(event.at("node_id").get<std::string>(), event.at("time").get<UnixSeconds>());
      } else if (kind == "deregister") {
        Deregister(event.at("node_id").get<std::string>());
      } else {
        Fail(RegistryErrc::kMalformedLog, where + ": unknown event '" + kind + "'");
      }
    } catch (const json::exception& e) {
      Fail(RegistryErrc::kMalformedLog, where + ": " + e.what());
    } catch (const RegistryError& e) {
      if (e.code() == RegistryErrc::kMalformedLog) throw;
      Fail(RegistryErrc::kMalformedLog, where + ": " + e.what());
    }
  }
}

}  // namespace geoshare::registry
