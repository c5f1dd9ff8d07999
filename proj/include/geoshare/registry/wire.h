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

#include <json.hpp>

#include "geoshare/registry/registry.h"

namespace geoshare::registry {

// JSON shapes shared by the HTTP service, its clients and the event log.
// Parsers throw RegistryError(kInvalidArgument) on malformed input.
nlohmann::json ToJson(const GeoBbox& bbox);
nlohmann::json ToJson(const DatasetRecord& dataset, bool with_timestamp);
nlohmann::json ToJson(const NodeRegistration& registration);
nlohmann::json ToJson(const CatalogEntry& entry);

GeoBbox ParseBbox(const nlohmann::json& value);
DatasetRecord ParseDataset(const nlohmann::json& value);
NodeRegistration ParseRegistration(const nlohmann::json& value);
CatalogEntry ParseCatalogEntry(const nlohmann::json& value);

}  // namespace geoshare::registry
