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

#include <cstdint>
#include <span>
#include <vector>

#include "geoshare/mesh/types.h"
#include "geoshare/tiles/tileset.h"

namespace geoshare::tiles {

inline constexpr std::uint32_t kGtbVersion = 1;
inline constexpr std::uint32_t kGtbNormals = 1u << 0;
inline constexpr std::uint32_t kGtbColors = 1u << 1;
inline constexpr std::size_t kGtbHeaderSize = 20;

// "GTB1" payload, little-endian, no padding.
std::vector<std::uint8_t> EncodeTile(const mesh::TriangleMesh& mesh);

// Throws kBadMagic; kUnsupportedVersion for another version or unknown flag
// bits; kTruncatedBuffer when the size disagrees with the header;
// kIndexOutOfRange for an index >= vertex count.
mesh::TriangleMesh DecodeTile(std::span<const std::uint8_t> bytes);

}  // namespace geoshare::tiles
