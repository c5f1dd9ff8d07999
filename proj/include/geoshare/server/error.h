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

#include <string>

#include "geoshare/common/error.h"

namespace geoshare::server {

enum class ServerErrc {
  kAddressOutOfRange,
  kCoordinateOutOfRange,
  kUpstreamUnavailable,
  kNotConfigured,
  kUnknownLayer,
  kInvalidLayer,
  kInvalidBbox,
  kInvalidAnnotation,
  kNotFound,
  kForbidden,
  kInvalidConfig,
  kIoError,
};

using ServerError = Error<ServerErrc>;

const char* ToString(ServerErrc code);
[[noreturn]] void Fail(ServerErrc code, const std::string& message);

}  // namespace geoshare::server
