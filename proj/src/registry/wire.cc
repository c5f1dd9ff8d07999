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

#include "geoshare/registry/wire.h"

#include <algorithm>

namespace geoshare::registry {
namespace {

using nlohmann::json;

const json& Field(const json& object, const char* key) {
  if (!object.is_object()) Fail(RegistryErrc::kInvalidArgument, "expected a JSON object");
  const auto it = object.find(key);
  if (it == object.end()) Fail(RegistryErrc::kInvalidArgument, std::string("missing '") + key + "'");
  return *it;
}

std::string String(const json& object, const char* key) {
  const json& v = Field(object, key);
  if (!v.is_string()) Fail(RegistryErrc::kInvalidArgument, std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

json ToJson(const GeoBbox& b) { return json::array({b.lon_min, b.lat_min, b.lon_max, b.lat_max}); }

json ToJson(const DatasetRecord& d, bool with_timestamp) {
  json out{{"dataset_id", d.dataset_id}, {"name", d.name}, {"kind", ToString(d.kind)}};
  if (d.bbox) out["bbox"] = ToJson(*d.bbox);
  if (with_timestamp) out["registered_at"] = d.registered_at;
  return out;
}

json ToJson(const NodeRegistration& r) {
  json datasets = json::array();
  for (const auto& d : r.datasets) datasets.push_back(ToJson(d, false));
  return {{"node_id", r.node_id}, {"base_url", r.base_url}, {"datasets", std::move(datasets)}};
}

json ToJson(const CatalogEntry& e) {
  json out = ToJson(e.dataset, false);
  out["node_id"] = e.node_id;
  out["url"] = e.url;
  return out;
}

GeoBbox ParseBbox(const json& v) {
  if (!v.is_array() || v.size() != 4 ||
      !std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); })) {
    Fail(RegistryErrc::kInvalidArgument, "bbox must be [lonMin, latMin, lonMax, latMax]");
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
}

DatasetRecord ParseDataset(const json& v) {
  DatasetRecord d;
  d.dataset_id = String(v, "dataset_id");
  d.name = String(v, "name");
  const std::string kind = String(v, "kind");
  const auto parsed = ParseDatasetKind(kind);
  if (!parsed) Fail(RegistryErrc::kInvalidDataset, "unknown kind '" + kind + "'");
  d.kind = *parsed;
  if (const auto it = v.find("bbox"); it != v.end() && !it->is_null()) d.bbox = ParseBbox(*it);
  if (const auto it = v.find("registered_at"); it != v.end()) {
    if (!it->is_number_integer()) Fail(RegistryErrc::kInvalidArgument, "registered_at");
    d.registered_at = it->get<UnixSeconds>();
  }
  return d;
}

NodeRegistration ParseRegistration(const json& v) {
  NodeRegistration r;
  r.node_id = String(v, "node_id");
  r.base_url = String(v, "base_url");
  const json& datasets = Field(v, "datasets");
  if (!datasets.is_array()) Fail(RegistryErrc::kInvalidArgument, "'datasets' must be an array");
  for (const auto& d : datasets) r.datasets.push_back(ParseDataset(d));
  return r;
}

CatalogEntry ParseCatalogEntry(const json& v) {
  CatalogEntry e;
  e.dataset = ParseDataset(v);
  e.node_id = String(v, "node_id");
  e.url = String(v, "url");
  return e;
}

}  // namespace geoshare::registry
