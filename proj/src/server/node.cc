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

#include "geoshare/server/node.h"

#include <openssl/evp.h>

#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "geoshare/registry/service.h"
#include "geoshare/tiles/manifest.h"

namespace geoshare::server {
namespace fs = std::filesystem;
namespace {

using nlohmann::json;

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    Fail(ServerErrc::kInvalidConfig, key + " = '" + value + "' is not a number");
  }
  return out;
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ServerErrc::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string ContentType(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".json") return "application/json";
  if (ext == ".gtb") return "application/octet-stream";
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  return "application/octet-stream";
}

StoredFile Store(std::string bytes, const std::string& content_type) {
  StoredFile f;
  f.etag = "\"" + Sha256Hex(bytes) + "\"";
  f.bytes = std::move(bytes);
  f.content_type = content_type;
  return f;
}

bool IsSafeRelative(const std::string& relative) {
  if (relative.empty() || relative.front() == '/' || relative.find('\\') != std::string::npos ||
      relative.find('\0') != std::string::npos) {
    return false;
  }
  std::size_t start = 0;
  while (start <= relative.size()) {
    auto end = relative.find('/', start);
    if (end == std::string::npos) end = relative.size();
    const std::string part = relative.substr(start, end - start);
    if (part.empty() || part == "." || part == "..") return false;
    start = end + 1;
  }
  return true;
}

DatasetEntry LoadDataset(const std::string& id, const fs::path& dir) {
  DatasetEntry entry;
  entry.dataset_id = id;
  try {
    entry.tileset = tiles::ParseManifest(ReadFile(dir / "tileset.json"));
  } catch (const tiles::TilesError& e) {
    Fail(ServerErrc::kIoError, (dir / "tileset.json").string() + ": " + e.what());
  }
  for (auto it = fs::recursive_directory_iterator(dir); it != fs::recursive_directory_iterator();
       ++it) {
    if (fs::is_symlink(it->symlink_status()) || !it->is_regular_file()) continue;
    const fs::path& path = it->path();
    entry.files[fs::relative(path, dir).generic_string()] = Store(ReadFile(path), ContentType(path));
  }
  return entry;
}

}  // namespace

// ----------------------------------------------------------------- config

void NodeConfig::Validate() const {
  if (port < 0 || port > 65535) Fail(ServerErrc::kInvalidConfig, "port out of range");
  if (cache_capacity == 0) Fail(ServerErrc::kInvalidConfig, "cache_capacity must be positive");
  if (heartbeat_interval <= 0) Fail(ServerErrc::kInvalidConfig, "heartbeat_interval must be positive");
  if (!base_url.empty() && !registry::IsValidBaseUrl(base_url)) {
    Fail(ServerErrc::kInvalidConfig, "base_url '" + base_url + "' is not a valid URL");
  }
  if (!registry_url.empty()) {
    if (!registry::IsValidBaseUrl(registry_url)) {
      Fail(ServerErrc::kInvalidConfig, "registry_url '" + registry_url + "' is not a valid URL");
    }
    if (!registry::IsValidId(node_id)) {
      Fail(ServerErrc::kInvalidConfig, "node_id '" + node_id + "' is missing or invalid");
    }
  }
}

NodeConfig ParseConfig(const std::string& text, NodeConfig config) {
  std::istringstream in(text);
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    std::string value;
    const auto eq = line.find('=');
    const std::string key = Trim(line.substr(0, eq));
    if (eq == std::string::npos) {
      if (key.empty() || key.front() == '#') continue;
      Fail(ServerErrc::kInvalidConfig, "line " + std::to_string(line_no) + ": expected key = value");
    }
    if (key.front() == '#') continue;
    value = Trim(line.substr(eq + 1));
    if (!value.empty() && value.front() == '"') {
      const auto close = value.find('"', 1);
      if (close == std::string::npos) {
        Fail(ServerErrc::kInvalidConfig, "line " + std::to_string(line_no) + ": unterminated string");
      }
      const std::string rest = Trim(value.substr(close + 1));
      if (!rest.empty() && rest.front() != '#') {
        Fail(ServerErrc::kInvalidConfig, "line " + std::to_string(line_no) + ": trailing text");
      }
      value = value.substr(1, close - 1);
    } else if (const auto hash = value.find(" #"); hash != std::string::npos) {
      value = Trim(value.substr(0, hash));
    }
    if (key == "host") config.host = value;
    else if (key == "port") config.port = ParseNumber<int>(key, value);
    else if (key == "data") config.data_dir = value;
    else if (key == "registry_url") config.registry_url = value;
    else if (key == "node_id") config.node_id = value;
    else if (key == "base_url") config.base_url = value;
    else if (key == "wmts_template") config.wmts_template = value;
    else if (key == "cache_capacity") config.cache_capacity = ParseNumber<std::size_t>(key, value);
    else if (key == "heartbeat_interval") config.heartbeat_interval = ParseNumber<int>(key, value);
    else Fail(ServerErrc::kInvalidConfig, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  config.Validate();
  return config;
}

NodeConfig LoadConfig(const fs::path& path, NodeConfig defaults) {
  return ParseConfig(ReadFile(path), std::move(defaults));
}

// ------------------------------------------------------------------ store

std::string Sha256Hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    Fail(ServerErrc::kIoError, "SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

bool EtagMatches(const std::string& if_none_match, const std::string& etag) {
  std::size_t start = 0;
  while (start < if_none_match.size()) {
    auto end = if_none_match.find(',', start);
    if (end == std::string::npos) end = if_none_match.size();
    std::string tag = Trim(if_none_match.substr(start, end - start));
    if (tag == "*") return true;
    if (tag.rfind("W/", 0) == 0) tag.erase(0, 2);
    if (tag == etag) return true;
    start = end + 1;
  }
  return false;
}

DataStore DataStore::Load(const fs::path& data_dir) {
  if (!fs::is_directory(data_dir)) Fail(ServerErrc::kIoError, data_dir.string() + " is not a directory");
  DataStore store;
  if (fs::is_regular_file(data_dir / "tileset.json")) {
    auto entry = LoadDataset("", data_dir);
    std::string id = entry.tileset.dataset_id;
    if (!registry::IsValidId(id)) id = fs::absolute(data_dir).lexically_normal().filename().string();
    entry.dataset_id = id;
    store.datasets_.emplace(id, std::move(entry));
  }
  if (fs::is_directory(data_dir / "datasets")) {
    for (const auto& d : fs::directory_iterator(data_dir / "datasets")) {
      if (!d.is_directory() || !fs::is_regular_file(d.path() / "tileset.json")) continue;
      const std::string id = d.path().filename().string();
      if (!registry::IsValidId(id)) Fail(ServerErrc::kIoError, "dataset directory name '" + id + "'");
      store.datasets_.emplace(id, LoadDataset(id, d.path()));
    }
  }
  if (fs::is_directory(data_dir / "layers")) {
    for (const auto& f : fs::directory_iterator(data_dir / "layers")) {
      if (!f.is_regular_file() || f.path().extension() != ".geojson") continue;
      const std::string id = f.path().stem().string();
      if (!registry::IsValidId(id)) Fail(ServerErrc::kIoError, "layer file name '" + id + "'");
      store.layers_.emplace(id, VectorLayer::Load(id, f.path()));
    }
  }
  if (fs::is_directory(data_dir / "annotations")) {
    for (const auto& f : fs::directory_iterator(data_dir / "annotations")) {
      if (!f.is_regular_file() || f.path().extension() != ".json") continue;
      const std::string id = f.path().stem().string();
      const auto it = store.datasets_.find(id);
      if (it == store.datasets_.end()) {
        Fail(ServerErrc::kInvalidAnnotation, f.path().string() + ": no dataset '" + id + "'");
      }
      json doc;
      try {
        doc = json::parse(ReadFile(f.path()));
      } catch (const json::exception& e) {
        Fail(ServerErrc::kInvalidAnnotation, f.path().string() + ": " + e.what());
      }
      it->second.annotations =
          ParseAnnotations(id, doc, it->second.tileset.root.bounding_volume);
    }
  }
  return store;
}

const StoredFile& DataStore::File(const std::string& dataset_id, const std::string& relative) const {
  if (!IsSafeRelative(relative)) Fail(ServerErrc::kForbidden, "'" + relative + "'");
  const auto& entry = Dataset(dataset_id);
  const auto it = entry.files.find(relative);
  if (it == entry.files.end()) Fail(ServerErrc::kNotFound, dataset_id + "/" + relative);
  return it->second;
}

const VectorLayer& DataStore::Layer(const std::string& layer_id) const {
  const auto it = layers_.find(layer_id);
  if (it == layers_.end()) Fail(ServerErrc::kUnknownLayer, "'" + layer_id + "'");
  return it->second;
}

const DatasetEntry& DataStore::Dataset(const std::string& dataset_id) const {
  const auto it = datasets_.find(dataset_id);
  if (it == datasets_.end()) Fail(ServerErrc::kNotFound, "dataset '" + dataset_id + "'");
  return it->second;
}

std::vector<registry::DatasetRecord> DataStore::Records() const {
  std::vector<registry::DatasetRecord> out;
  for (const auto& [id, d] : datasets_) {
    registry::DatasetRecord r;
    r.dataset_id = id;
    r.name = d.tileset.dataset_id.empty() ? id : d.tileset.dataset_id;
    r.kind = registry::DatasetKind::kTileset;
    r.bbox = AnchorExtent(d.tileset.geo_anchor, d.tileset.root.bounding_volume);
    out.push_back(std::move(r));
  }
  for (const auto& [id, layer] : layers_) {
    if (datasets_.count(id)) continue;  // a tileset already owns the id
    registry::DatasetRecord r;
    r.dataset_id = id;
    r.name = id;
    r.kind = registry::DatasetKind::kVectorLayer;
    if (const auto e = layer.Extent()) r.bbox = registry::GeoBbox{e->lon_min, e->lat_min, e->lon_max, e->lat_max};
    out.push_back(std::move(r));
  }
  return out;
}

registry::GeoBbox AnchorExtent(const tiles::GeoAnchor& anchor, const tiles::BoundingBox& box) {
  constexpr double kMetresPerDegree = 111320.0;
  const double lat_c = anchor.latitude_deg + box.center.y() / kMetresPerDegree;
  const double dlat = box.half_extent.y() / kMetresPerDegree;
  const double cos_lat = std::cos(anchor.latitude_deg * std::numbers::pi / 180.0);
  registry::GeoBbox out;
  out.lat_min = std::clamp(lat_c - dlat, -90.0, 90.0);
  out.lat_max = std::clamp(lat_c + dlat, -90.0, 90.0);
  if (cos_lat < 1e-6) {
    out.lon_min = -180.0;
    out.lon_max = 180.0;
    return out;
  }
  const double lon_c = anchor.longitude_deg + box.center.x() / (kMetresPerDegree * cos_lat);
  const double dlon = box.half_extent.x() / (kMetresPerDegree * cos_lat);
  out.lon_min = std::clamp(lon_c - dlon, -180.0, 180.0);
  out.lon_max = std::clamp(lon_c + dlon, -180.0, 180.0);
  return out;
}

// ----------------------------------------------------------------- server

struct NodeServer::Impl {
  NodeConfig config;
  DataStore store;
  std::unique_ptr<WmtsProxy> wmts;
  httplib::Server http;
  int bound_port = 0;

  std::mutex mutex;
  std::condition_variable wake;
  bool stopping = false;
  std::thread heartbeat;

  static void ReplyError(httplib::Response& res, int status, const std::string& error,
                         const std::string& message) {
    res.status = status;
    res.set_content(json{{"error", error}, {"message", message}}.dump(), "application/json");
  }

  static void ReplyError(httplib::Response& res, const ServerError& e) {
    switch (e.code()) {
      case ServerErrc::kForbidden: return ReplyError(res, 403, "forbidden", e.what());
      case ServerErrc::kNotFound: return ReplyError(res, 404, "not_found", e.what());
      case ServerErrc::kUnknownLayer: return ReplyError(res, 404, "unknown_layer", e.what());
      case ServerErrc::kNotConfigured: return ReplyError(res, 404, "not_configured", e.what());
      case ServerErrc::kInvalidBbox: return ReplyError(res, 400, "invalid_bbox", e.what());
      case ServerErrc::kAddressOutOfRange:
        return ReplyError(res, 400, "address_out_of_range", e.what());
      case ServerErrc::kUpstreamUnavailable:
        return ReplyError(res, 502, "upstream_unavailable", e.what());
      default: return ReplyError(res, 500, "internal", e.what());
    }
  }

  template <typename F>
  static void Guard(httplib::Response& res, F&& body) {
    try {
      body();
    } catch (const ServerError& e) {
      ReplyError(res, e);
    }
  }

  static void SendFile(const httplib::Request& req, httplib::Response& res, const StoredFile& file) {
    res.set_header("ETag", file.etag);
    res.set_header("Cache-Control", "no-cache");
    if (req.has_header("If-None-Match") &&
        EtagMatches(req.get_header_value("If-None-Match"), file.etag)) {
      res.status = 304;
      return;
    }
    res.status = 200;
    res.set_content(file.bytes, file.content_type);
  }

  void Routes() {
    http.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_header("Access-Control-Expose-Headers", "ETag");
    });
    http.Get("/api/v1/datasets", [this](const httplib::Request&, httplib::Response& res) {
      json list = json::array();
      for (const auto& r : store.Records()) {
        list.push_back({{"dataset_id", r.dataset_id}, {"name", r.name}, {"kind", ToString(r.kind)}});
      }
      res.set_content(json{{"datasets", std::move(list)}}.dump(), "application/json");
    });
    http.Get(R"(/api/v1/datasets/([^/]+)/(.+))",
             [this](const httplib::Request& req, httplib::Response& res) {
               Guard(res, [&] { SendFile(req, res, store.File(req.matches[1], req.matches[2])); });
             });
    http.Get(R"(/api/v1/wmts/([^/]+)/(\d+)/(\d+)/(\d+)\.([A-Za-z0-9]+))",
             [this](const httplib::Request& req, httplib::Response& res) {
               Guard(res, [&] {
                 if (!wmts) Fail(ServerErrc::kNotConfigured, "no upstream WMTS template");
                 WmtsAddress addr;
                 try {
                   addr = {std::stoi(req.matches[2]), std::stoll(req.matches[3]),
                           std::stoll(req.matches[4])};
                 } catch (const std::exception&) {
                   Fail(ServerErrc::kAddressOutOfRange, req.path);
                 }
                 const auto blob = wmts->Get(req.matches[1], addr);
                 res.set_content(blob->bytes, blob->content_type);
               });
             });
    http.Get("/api/v1/layers/:layer_id/features",
             [this](const httplib::Request& req, httplib::Response& res) {
               Guard(res, [&] {
                 const auto& layer = store.Layer(req.path_params.at("layer_id"));
                 const LonLatBox bbox = req.has_param("bbox")
                                            ? ParseBboxParam(req.get_param_value("bbox"))
                                            : LonLatBox{-180, -90, 180, 90};
                 res.set_content(ToFeatureCollection(layer.Query(bbox)).dump(),
                                 "application/geo+json");
               });
             });
    http.Get("/api/v1/annotations/:dataset_id",
             [this](const httplib::Request& req, httplib::Response& res) {
               Guard(res, [&] {
                 const auto& d = store.Dataset(req.path_params.at("dataset_id"));
                 res.set_content(ToJson(d.annotations).dump(), "application/json");
               });
             });
  }

  std::string BaseUrl() const {
    if (!config.base_url.empty()) return config.base_url;
    const std::string host = config.host == "0.0.0.0" ? "127.0.0.1" : config.host;
    return "http://" + host + ":" + std::to_string(bound_port);
  }

  registry::NodeRegistration Registration() const {
    return {config.node_id, BaseUrl(), store.Records()};
  }

  void Log(const std::string& message) { std::cerr << "geoshare serve: " << message << std::endl; }

  // Registers, then heartbeats until stopped; re-registers if the registry
  // forgot this node.
  void HeartbeatLoop() {
    registry::RegistryClient client(config.registry_url);
    bool registered = false;
    std::unique_lock lock(mutex);
    while (!stopping) {
      lock.unlock();
      try {
        if (registered) {
          client.Heartbeat(config.node_id);
        } else {
          client.Register(Registration());
          registered = true;
          Log("registered as '" + config.node_id + "' at " + config.registry_url);
        }
      } catch (const registry::RegistryError& e) {
        if (e.code() == registry::RegistryErrc::kUnknownNode) {
          registered = false;
          lock.lock();
          continue;
        }
        Log(e.what());
      }
      lock.lock();
      wake.wait_for(lock, std::chrono::seconds(config.heartbeat_interval), [&] { return stopping; });
    }
    lock.unlock();
    if (registered) {
      try {
        client.Deregister(config.node_id);
        Log("deregistered '" + config.node_id + "'");
      } catch (const registry::RegistryError& e) {
        Log(e.what());
      }
    }
  }
};

NodeServer::NodeServer(NodeConfig config, UpstreamFetcher fetch) : impl_(new Impl) {
  config.Validate();
  impl_->config = std::move(config);
  impl_->store = DataStore::Load(impl_->config.data_dir);
  if (!impl_->config.wmts_template.empty()) {
    impl_->wmts = std::make_unique<WmtsProxy>(impl_->config.wmts_template,
                                              impl_->config.cache_capacity, std::move(fetch));
  }
  impl_->Routes();
}

NodeServer::~NodeServer() { Stop(); }

int NodeServer::Bind() {
  auto& c = impl_->config;
  if (c.port == 0) {
    impl_->bound_port = impl_->http.bind_to_any_port(c.host);
    if (impl_->bound_port < 0) Fail(ServerErrc::kIoError, "cannot bind " + c.host);
  } else {
    if (!impl_->http.bind_to_port(c.host, c.port)) {
      Fail(ServerErrc::kIoError, "cannot bind " + c.host + ":" + std::to_string(c.port));
    }
    impl_->bound_port = c.port;
  }
  return impl_->bound_port;
}

void NodeServer::Serve() {
  if (impl_->bound_port == 0) Bind();
  if (!impl_->config.registry_url.empty()) {
    impl_->heartbeat = std::thread([this] { impl_->HeartbeatLoop(); });
  }
  impl_->http.listen_after_bind();
}

void NodeServer::Stop() {
  if (!impl_) return;
  {
    std::lock_guard lock(impl_->mutex);
    impl_->stopping = true;
  }
  impl_->wake.notify_all();
  impl_->http.stop();
  if (impl_->heartbeat.joinable()) impl_->heartbeat.join();
}

const NodeConfig& NodeServer::config() const { return impl_->config; }
const DataStore& NodeServer::store() const { return impl_->store; }
const WmtsProxy* NodeServer::wmts() const { return impl_->wmts.get(); }
registry::NodeRegistration NodeServer::Registration() const { return impl_->Registration(); }

}  // namespace geoshare::server
