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
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "geoshare/common/error.h"

namespace geoshare::mesh {

enum class MeshErrc {
  kInvalidRatio,
  kNoTriangles,
  kMissingAttributes,
  kIlluminationUnderdetermined,
  kEmptyMesh,
  kInvalidMesh,
  kParseError,
  kIoError,
  kInvalidArgument,
};

using MeshError = Error<MeshErrc>;

const char* ToString(MeshErrc code);
[[noreturn]] void Fail(MeshErrc code, const std::string& message);

using Rgba = std::array<std::uint8_t, 4>;
using Triangle = std::array<std::uint32_t, 3>;

// Closed axis-aligned box.
struct Aabb {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  static Aabb FromPoint(const Eigen::Vector3d& p) { return {p, p}; }

  Eigen::Vector3d Center() const { return 0.5 * (min + max); }
  Eigen::Vector3d HalfExtent() const { return 0.5 * (max - min); }
  double Diagonal() const { return (max - min).norm(); }
  bool Contains(const Eigen::Vector3d& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  bool Contains(const Aabb& other) const {
    return Contains(other.min) && Contains(other.max);
  }
  void Expand(const Eigen::Vector3d& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void Expand(const Aabb& other) {
    Expand(other.min);
    Expand(other.max);
  }
  // Euclidean distance from p to the box (0 inside).
  double Distance(const Eigen::Vector3d& p) const {
    return (p.cwiseMax(min).cwiseMin(max) - p).norm();
  }

  friend bool operator==(const Aabb&, const Aabb&) = default;
};

struct TriangleMesh {
  std::vector<Eigen::Vector3f> positions;
  // Empty, or one unit normal per position.
  std::vector<Eigen::Vector3f> normals;
  // Empty, or one RGBA color per position.
  std::vector<Rgba> colors;
  std::vector<Triangle> triangles;

  bool HasNormals() const { return !normals.empty(); }
  bool HasColors() const { return !colors.empty(); }
  std::size_t NumVertices() const { return positions.size(); }
  std::size_t NumTriangles() const { return triangles.size(); }

  Eigen::Vector3d Position(std::uint32_t v) const {
    return positions[v].cast<double>();
  }

  // Throws kInvalidMesh when an index is out of range, a triangle repeats a
  // vertex, attribute arrays have the wrong size or a normal is not unit.
  void Validate() const;

  friend bool operator==(const TriangleMesh&, const TriangleMesh&) = default;
};

// Tight bounds over all positions. Throws kEmptyMesh without vertices.
Aabb MeshBounds(const TriangleMesh& mesh);

double TriangleArea(const TriangleMesh& mesh, const Triangle& t);
double SurfaceArea(const TriangleMesh& mesh);

}  // namespace geoshare::mesh
