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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace geoshare {

struct PointCloud {
  std::vector<Eigen::Vector3d> positions;
  // Empty, or one RGB triple per position.
  std::vector<std::array<std::uint8_t, 3>> colors;
};

class PlyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ASCII PLY with `x y z` float properties, plus uchar `red green blue` when
// colors are present.
void WritePly(std::ostream& out, const PointCloud& cloud);
void WritePlyFile(const std::string& path, const PointCloud& cloud);

// Reads ASCII PLY vertex elements. Additional vertex properties are skipped,
// other elements (faces) are ignored.
PointCloud ReadPly(std::istream& in);
PointCloud ReadPlyFile(const std::string& path);

}  // namespace geoshare
