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

#include "geoshare/tiles/tileset.h"

namespace geoshare::tiles {

// tileset.json text; numbers are written with round-trip precision.
std::string WriteManifest(const Tileset& tileset);

// Throws kMalformedDocument, kMissingField (message names the path, e.g.
// "root.geometricError") or kUnknownRefineMode. Children without `refine`
// inherit their parent's mode.
Tileset ParseManifest(const std::string& text);

}  // namespace geoshare::tiles
