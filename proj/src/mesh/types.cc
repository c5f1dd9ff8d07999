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

#include "geoshare/mesh/types.h"

#include <cmath>

namespace geoshare::mesh {

const char* ToString(MeshErrc code) {
  switch (code) {
    case MeshErrc::kInvalidRatio: return "InvalidRatio";
    case MeshErrc::kNoTriangles: return "NoTriangles";
    case MeshErrc::kMissingAttributes: return "MissingAttributes";
    case MeshErrc::kIlluminationUnderdetermined: return "IlluminationUnderdetermined";
    case MeshErrc::kEmptyMesh: return "EmptyMesh";
    case MeshErrc::kInvalidMesh: return "InvalidMesh";
    case MeshErrc::kParseError: return "ParseError";
    case MeshErrc::kIoError: return "IoError";
    case MeshErrc::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

void Fail(MeshErrc code, const std::string& message) {
  throw MeshError(code, std::string("mesh: ") + ToString(code) + ": " + message);
}

void TriangleMesh::Validate() const {
  const std::size_t n = positions.size();
  if (!normals.empty() && normals.size() != n) {
    Fail(MeshErrc::kInvalidMesh, "normal count does not match vertex count");
  }
  if (!colors.empty() && colors.size() != n) {
    Fail(MeshErrc::kInvalidMesh, "color count does not match vertex count");
  }
  for (std::size_t i = 0; i < triangles.size(); ++i) {
    const auto& t = triangles[i];
    if (t[0] >= n || t[1] >= n || t[2] >= n) {
      Fail(MeshErrc::kInvalidMesh, "triangle " + std::to_string(i) +
                                       " references a missing vertex");
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      Fail(MeshErrc::kInvalidMesh,
           "triangle " + std::to_string(i) + " repeats a vertex");
    }
  }
  for (std::size_t i = 0; i < normals.size(); ++i) {
    if (!(std::abs(normals[i].cast<double>().norm() - 1.0) <= 1e-6)) {
      Fail(MeshErrc::kInvalidMesh, "normal " + std::to_string(i) + " is not unit");
    }
  }
}

Aabb MeshBounds(const TriangleMesh& mesh) {
  if (mesh.positions.empty()) Fail(MeshErrc::kEmptyMesh, "mesh has no vertices");
  Aabb box = Aabb::FromPoint(mesh.Position(0));
  for (std::uint32_t v = 1; v < mesh.positions.size(); ++v) box.Expand(mesh.Position(v));
  return box;
}

double TriangleArea(const TriangleMesh& mesh, const Triangle& t) {
  const Eigen::Vector3d a = mesh.Position(t[0]);
  return 0.5 * (mesh.Position(t[1]) - a).cross(mesh.Position(t[2]) - a).norm();
}

double SurfaceArea(const TriangleMesh& mesh) {
  double area = 0.0;
  for (const auto& t : mesh.triangles) area += TriangleArea(mesh, t);
  return area;
}

}  // namespace geoshare::mesh
