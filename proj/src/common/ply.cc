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

#include "geoshare/common/ply.h"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace geoshare {

void WritePly(std::ostream& out, const PointCloud& cloud) {
  const bool colored = !cloud.colors.empty();
  if (colored && cloud.colors.size() != cloud.positions.size()) {
    throw PlyError("ply: color count does not match position count");
  }
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << cloud.positions.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (colored) {
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  }
  out << "end_header\n";
  out << std::setprecision(std::numeric_limits<float>::max_digits10);
  for (std::size_t i = 0; i < cloud.positions.size(); ++i) {
    const auto& p = cloud.positions[i];
    out << static_cast<float>(p.x()) << ' ' << static_cast<float>(p.y()) << ' '
        << static_cast<float>(p.z());
    if (colored) {
      out << ' ' << int{cloud.colors[i][0]} << ' ' << int{cloud.colors[i][1]}
          << ' ' << int{cloud.colors[i][2]};
    }
    out << '\n';
  }
}

void WritePlyFile(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PlyError("ply: cannot open " + path + " for writing");
  WritePly(out, cloud);
}

PointCloud ReadPly(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
    throw PlyError("ply: missing magic");
  }
  std::size_t vertex_count = 0;
  bool in_vertex = false;
  bool seen_vertex = false;
  int element_index = 0;
  std::vector<std::string> properties;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string keyword;
    ls >> keyword;
    if (keyword == "format") {
      std::string format;
      ls >> format;
      if (format != "ascii") throw PlyError("ply: only ascii format is supported");
    } else if (keyword == "element") {
      std::string name;
      std::size_t count = 0;
      ls >> name >> count;
      in_vertex = name == "vertex";
      if (in_vertex) {
        if (element_index != 0) {
          throw PlyError("ply: vertex element must come first");
        }
        vertex_count = count;
        seen_vertex = true;
      }
      ++element_index;
    } else if (keyword == "property") {
      if (in_vertex) {
        std::string type, name;
        ls >> type >> name;
        if (type == "list") throw PlyError("ply: list vertex property unsupported");
        properties.push_back(name);
      }
    } else if (keyword == "end_header") {
      break;
    }
  }
  if (!seen_vertex) throw PlyError("ply: no vertex element");

  int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
  for (int i = 0; i < static_cast<int>(properties.size()); ++i) {
    const auto& p = properties[i];
    if (p == "x") ix = i;
    if (p == "y") iy = i;
    if (p == "z") iz = i;
    if (p == "red") ir = i;
    if (p == "green") ig = i;
    if (p == "blue") ib = i;
  }
  if (ix < 0 || iy < 0 || iz < 0) throw PlyError("ply: missing x/y/z properties");
  const bool colored = ir >= 0 && ig >= 0 && ib >= 0;

  PointCloud cloud;
  cloud.positions.reserve(vertex_count);
  std::vector<double> values(properties.size());
  for (std::size_t v = 0; v < vertex_count; ++v) {
    if (!std::getline(in, line)) throw PlyError("ply: truncated vertex list");
    std::istringstream ls(line);
    for (auto& value : values) {
      if (!(ls >> value)) {
        throw PlyError("ply: malformed vertex line " + std::to_string(v));
      }
    }
    cloud.positions.emplace_back(values[ix], values[iy], values[iz]);
    if (colored) {
      cloud.colors.push_back({static_cast<std::uint8_t>(values[ir]),
                              static_cast<std::uint8_t>(values[ig]),
                              static_cast<std::uint8_t>(values[ib])});
    }
  }
  return cloud;
}

PointCloud ReadPlyFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PlyError("ply: cannot open " + path);
  return ReadPly(in);
}

}  // namespace geoshare
