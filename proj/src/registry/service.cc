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

#include "geoshare/registry/service.h"

#include <chrono>

#include <httplib.h>
#include <json.hpp>

#include "geoshare/registry/wire.h"

namespace geoshare::registry {
namespace {

using nlohmann::json;

constexpr const char* kJson = "application/json";

void Reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void ReplyError(httplib::Response& res, int status, const std::string& error,
                const std::string& message) {
  Reply(res, status, {{"error", error}, {"message", message}});
}

// Only the errors that cross the wire need names the client understands.
std::string WireName(RegistryErrc code) {
  switch (code) {
    case RegistryErrc::kUnknownNode: return "unknown_node";
    case RegistryErrc::kUnknownDataset: return "unknown_dataset";
    case RegistryErrc::kNoLiveReplica: return "no_live_replica";
    case RegistryErrc::kEmptyNodeId: return "empty_node_id";
    case RegistryErrc::kInvalidNodeId: return "invalid_node_id";
    case RegistryErrc::kInvalidBaseUrl: return "invalid_base_url";
    case RegistryErrc::kInvalidDataset: return "invalid_dataset";
    default: return "invalid_request";
  }
}

std::optional<RegistryErrc> FromWireName(const std::string& name) {
  for (const auto code :
       {RegistryErrc::kUnknownNode, RegistryErrc::kUnknownDataset, RegistryErrc::kNoLiveReplica,
        RegistryErrc::kEmptyNodeId, RegistryErrc::kInvalidNodeId, RegistryErrc::kInvalidBaseUrl,
        RegistryErrc::kInvalidDataset}) {
    if (WireName(code) == name) return code;
  }
  return std::nullopt;
}

int StatusFor(RegistryErrc code) {
  switch (code) {
    case RegistryErrc::kUnknownNode:
    case RegistryErrc::kUnknownDataset:
    case RegistryErrc::kNoLiveReplica:
      return 404;
    case RegistryErrc::kIoError:
      return 500;
    default:
      return 400;
  }
}

}  // namespace

UnixSeconds SystemClock() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

struct RegistryService::Impl {
  Registry& registry;
  Clock clock;
  UnixSeconds window;
  httplib::Server server;

  // Runs a handler body, mapping registry errors onto HTTP statuses.
  template <typename F>
  static void Guard(httplib::Response& res, F&& body) {
    try {
      body();
    } catch (const RegistryError& e) {
      ReplyError(res, StatusFor(e.code()), WireName(e.code()), e.what());
    } catch (const json::exception& e) {
      ReplyError(res, 400, "invalid_request", e.what());
    }
  }

  void Routes() {
    server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
    });
    server.Post("/api/v1/nodes", [this](const httplib::Request& req, httplib::Response& res) {
      Guard(res, [&] {
        const auto record = registry.Register(ParseRegistration(json::parse(req.body)), clock());
        Reply(res, 200, {{"registered_at", record.registered_at}});
      });
    });
    server.Put("/api/v1/nodes/:node_id/heartbeat",
               [this](const httplib::Request& req, httplib::Response& res) {
                 Guard(res, [&] {
                   registry.Heartbeat(req.path_params.at("node_id"), clock());
                   res.status = 204;
                 });
               });
    server.Delete("/api/v1/nodes/:node_id",
                  [this](const httplib::Request& req, httplib::Response& res) {
                    Guard(res, [&] {
                      registry.Deregister(req.path_params.at("node_id"));
                      res.status = 204;
                    });
                  });
    server.Get("/api/v1/nodes", [this](const httplib::Request&, httplib::Response& res) {
      json nodes = json::array();
      for (const auto& n : registry.Nodes()) {
        json datasets = json::array();
        for (const auto& d : n.datasets) datasets.push_back(ToJson(d, true));
        nodes.push_back({{"node_id", n.node_id},
                         {"base_url", n.base_url},
                         {"registered_at", n.registered_at},
                         {"last_heartbeat", n.last_heartbeat},
                         {"datasets", std::move(datasets)}});
      }
      Reply(res, 200, {{"nodes", std::move(nodes)}});
    });
    server.Get("/api/v1/catalog", [this](const httplib::Request&, httplib::Response& res) {
      json datasets = json::array();
      for (const auto& e : registry.Catalog(clock(), window)) datasets.push_back(ToJson(e));
      Reply(res, 200, {{"datasets", std::move(datasets)}});
    });
    server.Get("/api/v1/datasets/:dataset_id",
               [this](const httplib::Request& req, httplib::Response& res) {
                 Guard(res, [&] {
                   const auto r = registry.Resolve(req.path_params.at("dataset_id"), clock(), window);
                   Reply(res, 200, {{"url", r.url}, {"node_id", r.node_id}});
                 });
               });
  }
};

RegistryService::RegistryService(Registry& registry, Clock clock, UnixSeconds staleness_window)
    : impl_(new Impl{registry, std::move(clock), staleness_window, {}}) {
  if (staleness_window <= 0) Fail(RegistryErrc::kInvalidArgument, "staleness window must be positive");
  impl_->Routes();
}

RegistryService::~RegistryService() { Stop(); }

int RegistryService::Bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) Fail(RegistryErrc::kIoError, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    Fail(RegistryErrc::kIoError, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void RegistryService::Serve() { impl_->server.listen_after_bind(); }

void RegistryService::Stop() {
  if (impl_) impl_->server.stop();
}

struct RegistryClient::Impl {
  std::string prefix;
  std::unique_ptr<httplib::Client> client;

  httplib::Result Check(httplib::Result result, const std::string& what) {
    if (!result) {
      Fail(RegistryErrc::kIoError, what + ": " + httplib::to_string(result.error()));
    }
    return result;
  }

  [[noreturn]] void Raise(const httplib::Response& res, const std::string& what) {
    std::optional<RegistryErrc> code;
    std::string message = what + ": HTTP " + std::to_string(res.status);
    try {
      const json body = json::parse(res.body);
      code = FromWireName(body.value("error", ""));
      message += " " + body.value("message", "");
    } catch (const json::exception&) {
    }
    Fail(code.value_or(res.status >= 500 ? RegistryErrc::kIoError : RegistryErrc::kInvalidArgument),
         message);
  }
};

RegistryClient::RegistryClient(const std::string& registry_url) : impl_(new Impl) {
  const auto scheme = registry_url.find("://");
  if (scheme == std::string::npos || !IsValidBaseUrl(registry_url)) {
    Fail(RegistryErrc::kInvalidBaseUrl, "'" + registry_url + "'");
  }
  const auto path = registry_url.find('/', scheme + 3);
  const std::string origin = registry_url.substr(0, path);
  if (path != std::string::npos) impl_->prefix = registry_url.substr(path);
  while (!impl_->prefix.empty() && impl_->prefix.back() == '/') impl_->prefix.pop_back();
  impl_->client = std::make_unique<httplib::Client>(origin);
  if (!impl_->client->is_valid()) Fail(RegistryErrc::kInvalidBaseUrl, "'" + registry_url + "'");
  impl_->client->set_connection_timeout(std::chrono::seconds(5));
  impl_->client->set_read_timeout(std::chrono::seconds(10));
}

RegistryClient::~RegistryClient() = default;

UnixSeconds RegistryClient::Register(const NodeRegistration& registration) {
  auto res = impl_->Check(impl_->client->Post(impl_->prefix + "/api/v1/nodes",
                                              ToJson(registration).dump(), kJson),
                          "register");
  if (res->status != 200) impl_->Raise(*res, "register");
  try {
    return json::parse(res->body).at("registered_at").get<UnixSeconds>();
  } catch (const json::exception& e) {
    Fail(RegistryErrc::kIoError, std::string("register: bad response: ") + e.what());
  }
}

void RegistryClient::Heartbeat(const std::string& node_id) {
  auto res = impl_->Check(
      impl_->client->Put(impl_->prefix + "/api/v1/nodes/" + node_id + "/heartbeat"), "heartbeat");
  if (res->status != 204) impl_->Raise(*res, "heartbeat");
}

void RegistryClient::Deregister(const std::string& node_id) {
  auto res = impl_->Check(impl_->client->Delete(impl_->prefix + "/api/v1/nodes/" + node_id),
                          "deregister");
  if (res->status != 204) impl_->Raise(*res, "deregister");
}

std::vector<CatalogEntry> RegistryClient::Catalog() {
  auto res = impl_->Check(impl_->client->Get(impl_->prefix + "/api/v1/catalog"), "catalog");
  if (res->status != 200) impl_->Raise(*res, "catalog");
  try {
    const json body = json::parse(res->body);
    std::vector<CatalogEntry> out;
    for (const auto& e : body.at("datasets")) out.push_back(ParseCatalogEntry(e));
    return out;
  } catch (const json::exception& e) {
    Fail(RegistryErrc::kIoError, std::string("catalog: bad response: ") + e.what());
  }
}

Resolution RegistryClient::Resolve(const std::string& dataset_id) {
  auto res = impl_->Check(impl_->client->Get(impl_->prefix + "/api/v1/datasets/" + dataset_id),
                          "resolve");
  if (res->status != 200) impl_->Raise(*res, "resolve");
  try {
    const json body = json::parse(res->body);
    return {body.at("url").get<std::string>(), body.at("node_id").get<std::string>()};
  } catch (const json::exception& e) {
    Fail(RegistryErrc::kIoError, std::string("resolve: bad response: ") + e.what());
  }
}

}  // namespace geoshare::registry
