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

#include "geoshare/server/wmts.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>

#include <httplib.h>

namespace geoshare::server {

const char* ToString(ServerErrc code) {
  switch (code) {
    case ServerErrc::kAddressOutOfRange: return "AddressOutOfRange";
    case ServerErrc::kCoordinateOutOfRange: return "CoordinateOutOfRange";
    case ServerErrc::kUpstreamUnavailable: return "UpstreamUnavailable";
    case ServerErrc::kNotConfigured: return "NotConfigured";
    case ServerErrc::kUnknownLayer: return "UnknownLayer";
    case ServerErrc::kInvalidLayer: return "InvalidLayer";
    case ServerErrc::kInvalidBbox: return "InvalidBbox";
    case ServerErrc::kInvalidAnnotation: return "InvalidAnnotation";
    case ServerErrc::kNotFound: return "NotFound";
    case ServerErrc::kForbidden: return "Forbidden";
    case ServerErrc::kInvalidConfig: return "InvalidConfig";
    case ServerErrc::kIoError: return "IoError";
  }
  return "Unknown";
}

void Fail(ServerErrc code, const std::string& message) {
  throw ServerError(code, std::string("server: ") + ToString(code) + ": " + message);
}

bool WmtsAddress::IsValid() const {
  if (z < 0 || z > kMaxZoom) return false;
  const std::int64_t rows = std::int64_t{1} << z;
  return row >= 0 && row < rows && col >= 0 && col < 2 * rows;
}

double TileWidthDegrees(int z) { return std::ldexp(180.0, -z); }

LonLatBox WmtsTileBbox(const WmtsAddress& addr) {
  if (!addr.IsValid()) {
    Fail(ServerErrc::kAddressOutOfRange, "z=" + std::to_string(addr.z) + " row=" +
                                             std::to_string(addr.row) + " col=" +
                                             std::to_string(addr.col));
  }
  const double w = TileWidthDegrees(addr.z);
  LonLatBox box;
  box.lon_min = -180.0 + static_cast<double>(addr.col) * w;
  box.lon_max = box.lon_min + w;
  box.lat_max = 90.0 - static_cast<double>(addr.row) * w;
  box.lat_min = box.lat_max - w;
  return box;
}

WmtsAddress LonLatToWmts(double lon, double lat, int z) {
  if (z < 0 || z > kMaxZoom) Fail(ServerErrc::kAddressOutOfRange, "z=" + std::to_string(z));
  if (!(lon >= -180.0 && lon < 180.0) || !(lat > -90.0 && lat <= 90.0)) {
    Fail(ServerErrc::kCoordinateOutOfRange,
         "(" + std::to_string(lon) + ", " + std::to_string(lat) + ")");
  }
  const double w = TileWidthDegrees(z);
  const std::int64_t rows = std::int64_t{1} << z;
  WmtsAddress a{z, static_cast<std::int64_t>(std::floor((90.0 - lat) / w)),
                static_cast<std::int64_t>(std::floor((lon + 180.0) / w))};
  a.row = std::clamp<std::int64_t>(a.row, 0, rows - 1);
  a.col = std::clamp<std::int64_t>(a.col, 0, 2 * rows - 1);
  // Settle rounding at tile edges against the forward mapping.
  auto box = WmtsTileBbox(a);
  while (lon < box.lon_min && a.col > 0) box = WmtsTileBbox({z, a.row, --a.col});
  while (lon >= box.lon_max && a.col < 2 * rows - 1) box = WmtsTileBbox({z, a.row, ++a.col});
  while (lat > box.lat_max && a.row > 0) box = WmtsTileBbox({z, --a.row, a.col});
  while (lat <= box.lat_min && a.row < rows - 1) box = WmtsTileBbox({z, ++a.row, a.col});
  return a;
}

struct TileCache::Flight {
  std::condition_variable done;
  bool finished = false;
  std::shared_ptr<const TileBlob> blob;
  std::exception_ptr error;
};

TileCache::TileCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) Fail(ServerErrc::kInvalidConfig, "cache capacity must be positive");
}

std::shared_ptr<const TileBlob> TileCache::GetOrLoad(const std::string& key, const Loader& load) {
  std::unique_lock lock(mutex_);
  if (const auto it = entries_.find(key); it != entries_.end()) {
    order_.splice(order_.begin(), order_, it->second.second);
    return it->second.first;
  }
  if (const auto it = flights_.find(key); it != flights_.end()) {
    const auto flight = it->second;
    flight->done.wait(lock, [&] { return flight->finished; });
    if (flight->error) std::rethrow_exception(flight->error);
    return flight->blob;
  }
  const auto flight = std::make_shared<Flight>();
  flights_[key] = flight;
  lock.unlock();
  try {
    flight->blob = std::make_shared<const TileBlob>(load());
  } catch (...) {
    flight->error = std::current_exception();
  }
  lock.lock();
  flights_.erase(key);
  if (!flight->error) Insert(key, flight->blob);
  flight->finished = true;
  flight->done.notify_all();
  if (flight->error) std::rethrow_exception(flight->error);
  return flight->blob;
}

std::shared_ptr<const TileBlob> TileCache::Peek(const std::string& key) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : it->second.first;
}

std::size_t TileCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

void TileCache::Insert(const std::string& key, std::shared_ptr<const TileBlob> blob) {
  order_.push_front(key);
  entries_[key] = {std::move(blob), order_.begin()};
  while (entries_.size() > capacity_) {
    entries_.erase(order_.back());
    order_.pop_back();
  }
}

UpstreamResponse HttpFetch(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) return {};
  const auto path = url.find('/', scheme + 3);
  httplib::Client client(url.substr(0, path));
  if (!client.is_valid()) return {};
  client.set_connection_timeout(std::chrono::seconds(5));
  client.set_read_timeout(std::chrono::seconds(15));
  client.set_follow_location(true);
  const auto res = client.Get(path == std::string::npos ? "/" : url.substr(path));
  if (!res) return {};
  return {res->status, res->body, res->get_header_value("Content-Type")};
}

std::string ExpandTemplate(const std::string& url_template, const std::string& layer,
                           const WmtsAddress& addr) {
  std::string out;
  for (std::size_t i = 0; i < url_template.size();) {
    if (url_template.compare(i, 2, "${") == 0) {
      const auto close = url_template.find('}', i);
      if (close == std::string::npos) Fail(ServerErrc::kInvalidConfig, "unterminated ${ in template");
      const char* value = std::getenv(url_template.substr(i + 2, close - i - 2).c_str());
      out += value ? value : "";
      i = close + 1;
      continue;
    }
    bool matched = false;
    for (const auto& [name, value] :
         {std::pair<std::string, std::string>{"{z}", std::to_string(addr.z)},
          {"{y}", std::to_string(addr.row)},
          {"{x}", std::to_string(addr.col)},
          {"{layer}", layer}}) {
      if (url_template.compare(i, name.size(), name) == 0) {
        out += value;
        i += name.size();
        matched = true;
        break;
      }
    }
    if (!matched) out += url_template[i++];
  }
  return out;
}

WmtsProxy::WmtsProxy(std::string url_template, std::size_t cache_capacity, UpstreamFetcher fetch)
    : template_(std::move(url_template)), fetch_(std::move(fetch)), cache_(cache_capacity) {}

std::shared_ptr<const TileBlob> WmtsProxy::Get(const std::string& layer, const WmtsAddress& addr) {
  if (!addr.IsValid()) WmtsTileBbox(addr);  // raises AddressOutOfRange
  if (template_.empty()) Fail(ServerErrc::kNotConfigured, "no upstream WMTS template");
  const std::string key = layer + "/" + std::to_string(addr.z) + "/" + std::to_string(addr.row) +
                          "/" + std::to_string(addr.col);
  return cache_.GetOrLoad(key, [&] {
    const std::string url = ExpandTemplate(template_, layer, addr);
    UpstreamResponse res = fetch_(url);
    if (res.status != 200) {
      Fail(ServerErrc::kUpstreamUnavailable,
           url + (res.status == 0 ? ": unreachable" : ": HTTP " + std::to_string(res.status)));
    }
    return TileBlob{std::move(res.body), res.content_type.empty() ? "application/octet-stream"
                                                                  : std::move(res.content_type)};
  });
}

}  // namespace geoshare::server
