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

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "geoshare/server/error.h"

namespace geoshare::server {

// WGS84 geodetic tile matrix: level z has 2^(z+1) columns and 2^z rows of
// square tiles 180/2^z degrees wide, row 0 at the north edge.
inline constexpr int kMaxZoom = 30;

struct WmtsAddress {
  int z = 0;
  std::int64_t row = 0;
  std::int64_t col = 0;

  bool IsValid() const;
  friend bool operator==(const WmtsAddress&, const WmtsAddress&) = default;
};

struct LonLatBox {
  double lon_min = 0, lat_min = 0, lon_max = 0, lat_max = 0;

  friend bool operator==(const LonLatBox&, const LonLatBox&) = default;
};

double TileWidthDegrees(int z);
LonLatBox WmtsTileBbox(const WmtsAddress& addr);
// Tile containing the point; tiles are closed on the west and north edges.
WmtsAddress LonLatToWmts(double lon, double lat, int z);

struct TileBlob {
  std::string bytes;
  std::string content_type;
};

// Bounded LRU of tile blobs with single-flight misses: concurrent lookups of
// a missing key share one call to the loader. Failed loads are not cached.
class TileCache {
 public:
  using Loader = std::function<TileBlob()>;

  explicit TileCache(std::size_t capacity = 1024);

  std::shared_ptr<const TileBlob> GetOrLoad(const std::string& key, const Loader& load);
  std::shared_ptr<const TileBlob> Peek(const std::string& key) const;

  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }

 private:
  struct Flight;
  using Order = std::list<std::string>;

  void Insert(const std::string& key, std::shared_ptr<const TileBlob> blob);

  const std::size_t capacity_;
  mutable std::mutex mutex_;
  Order order_;  // most recent first
  std::unordered_map<std::string, std::pair<std::shared_ptr<const TileBlob>, Order::iterator>> entries_;
  std::unordered_map<std::string, std::shared_ptr<Flight>> flights_;
};

struct UpstreamResponse {
  int status = 0;  // 0 when the transport failed
  std::string body;
  std::string content_type;
};

using UpstreamFetcher = std::function<UpstreamResponse(const std::string& url)>;

// GET over plain HTTP via cpp-httplib.
UpstreamResponse HttpFetch(const std::string& url);

// Substitutes {z}, {y} (row), {x} (col) and {layer}; ${NAME} expands to the
// environment variable NAME so credentials stay out of config files.
std::string ExpandTemplate(const std::string& url_template, const std::string& layer,
                           const WmtsAddress& addr);

class WmtsProxy {
 public:
  WmtsProxy(std::string url_template, std::size_t cache_capacity = 1024,
            UpstreamFetcher fetch = HttpFetch);

  // Cache-first; a miss fetches upstream once, however many callers wait.
  std::shared_ptr<const TileBlob> Get(const std::string& layer, const WmtsAddress& addr);

  const TileCache& cache() const { return cache_; }

 private:
  std::string template_;
  UpstreamFetcher fetch_;
  TileCache cache_;
};

}  // namespace geoshare::server
