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

#include "geoshare/mesh/obj.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace geoshare::mesh {
namespace {

[[noreturn]] void ParseFail(std::size_t line_no, const std::string& what) {
  Fail(MeshErrc::kParseError, "line " + std::to_string(line_no) + ": " + what);
}

// Resolves a 1-based (or negative, relative) OBJ index against `count`.
std::uint32_t ResolveIndex(std::string_view text, std::size_t count, std::size_t line_no) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value == 0) {
    ParseFail(line_no, "bad index '" + std::string(text) + "'");
  }
  const long long resolved = value > 0 ? value - 1 : static_cast<long long>(count) + value;
  if (resolved < 0 || resolved >= static_cast<long long>(count)) {
    ParseFail(line_no, "index " + std::string(text) + " out of range");
  }
  return static_cast<std::uint32_t>(resolved);
}

std::uint8_t ColorByte(double x) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0));
}

}  // namespace

TriangleMesh ReadObj(std::istream& in) {
  TriangleMesh mesh;
  std::vector<Eigen::Vector3f> normal_pool;
  std::vector<bool> has_normal;
  bool any_color = false;
  bool any_face_normal = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      std::vector<double> values;
      double x = 0.0;
      while (ls >> x) values.push_back(x);
      if (!ls.eof()) ParseFail(line_no, "malformed vertex");
      if (values.size() != 3 && values.size() != 6 && values.size() != 4 &&
          values.size() != 7) {
        ParseFail(line_no, "vertex needs 3 or 6 numbers");
      }
      mesh.positions.emplace_back(static_cast<float>(values[0]),
                                  static_cast<float>(values[1]),
                                  static_cast<float>(values[2]));
      // 4 or 7 values: a homogeneous w (ignored) in front of the colors.
      const std::size_t c = values.size() >= 6 ? values.size() - 3 : 0;
      if (c > 0) {
        any_color = true;
        mesh.colors.push_back({ColorByte(values[c]), ColorByte(values[c + 1]),
                               ColorByte(values[c + 2]), 255});
      } else {
        mesh.colors.push_back({255, 255, 255, 255});
      }
      has_normal.push_back(false);
    } else if (tag == "vn") {
      double x = 0.0, y = 0.0, z = 0.0;
      if (!(ls >> x >> y >> z)) ParseFail(line_no, "malformed normal");
      Eigen::Vector3d n(x, y, z);
      const double len = n.norm();
      if (!(len > 0.0)) ParseFail(line_no, "zero-length normal");
      normal_pool.push_back((n / len).cast<float>().normalized());
    } else if (tag == "f") {
      std::vector<std::uint32_t> corners;
      std::string token;
      while (ls >> token) {
        const std::string_view view(token);
        const auto slash = view.find('/');
        const std::uint32_t v =
            ResolveIndex(view.substr(0, slash), mesh.positions.size(), line_no);
        if (slash != std::string_view::npos) {
          const auto second = view.find('/', slash + 1);
          if (second != std::string_view::npos && second + 1 < view.size()) {
            const std::uint32_t n =
                ResolveIndex(view.substr(second + 1), normal_pool.size(), line_no);
            any_face_normal = true;
            if (!has_normal[v]) {
              if (mesh.normals.size() < mesh.positions.size()) {
                mesh.normals.resize(mesh.positions.size(), Eigen::Vector3f::UnitZ());
              }
              mesh.normals[v] = normal_pool[n];
              has_normal[v] = true;
            }
          }
        }
        corners.push_back(v);
      }
      if (corners.size() < 3) ParseFail(line_no, "face needs at least 3 vertices");
      for (std::size_t i = 1; i + 1 < corners.size(); ++i) {
        const Triangle t{corners[0], corners[i], corners[i + 1]};
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
          ParseFail(line_no, "face repeats a vertex");
        }
        mesh.triangles.push_back(t);
      }
    }
    // vt, o, g, s, usemtl, mtllib and anything else are ignored.
  }
  if (!any_color) mesh.colors.clear();
  if (any_face_normal) {
    mesh.normals.resize(mesh.positions.size(), Eigen::Vector3f::UnitZ());
  } else {
    mesh.normals.clear();
  }
  mesh.Validate();
  return mesh;
}

TriangleMesh ReadObjFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(MeshErrc::kIoError, "cannot open " + path);
  return ReadObj(in);
}

void WriteObj(std::ostream& out, const TriangleMesh& mesh) {
  mesh.Validate();
  out << std::setprecision(std::numeric_limits<float>::max_digits10);
  for (std::size_t v = 0; v < mesh.positions.size(); ++v) {
    const auto& p = mesh.positions[v];
    out << "v " << p.x() << ' ' << p.y() << ' ' << p.z();
    if (mesh.HasColors()) {
      const auto& c = mesh.colors[v];
      out << ' ' << c[0] / 255.0f << ' ' << c[1] / 255.0f << ' ' << c[2] / 255.0f;
    }
    out << '\n';
  }
  for (const auto& n : mesh.normals) {
    out << "vn " << n.x() << ' ' << n.y() << ' ' << n.z() << '\n';
  }
  for (const auto& t : mesh.triangles) {
    out << 'f';
    for (const auto v : t) {
      out << ' ' << v + 1;
      if (mesh.HasNormals()) out << "//" << v + 1;
    }
    out << '\n';
  }
}

void WriteObjFile(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(MeshErrc::kIoError, "cannot open " + path + " for writing");
  WriteObj(out, mesh);
  if (!out) Fail(MeshErrc::kIoError, "write to " + path + " failed");
}

}  // namespace geoshare::mesh
