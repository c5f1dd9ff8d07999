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

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "geoshare/registry/registry.h"

namespace geoshare::registry {

using Clock = std::function<UnixSeconds()>;

UnixSeconds SystemClock();

// HTTP front end for a Registry under /api/v1.
class RegistryService {
 public:
  RegistryService(Registry& registry, Clock clock = SystemClock,
                  UnixSeconds staleness_window = kDefaultStalenessWindow);
  ~RegistryService();

  // Port 0 binds an ephemeral port. Returns the bound port.
  int Bind(const std::string& host, int port);
  // Blocks until Stop() is called from another thread.
  void Serve();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Blocking client for the service above. Transport failures raise kIoError;
// HTTP errors map back onto the registry error codes.
class RegistryClient {
 public:
  // e.g. "http://127.0.0.1:8090"; a path prefix is allowed.
  explicit RegistryClient(const std::string& registry_url);
  ~RegistryClient();

  UnixSeconds Register(const NodeRegistration& registration);
  void Heartbeat(const std::string& node_id);
  void Deregister(const std::string& node_id);
  std::vector<CatalogEntry> Catalog();
  Resolution Resolve(const std::string& dataset_id);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace geoshare::registry
