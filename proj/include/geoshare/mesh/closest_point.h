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
#include <vector>

#include <Eigen/Core>

#include "geoshare/mesh/types.h"

namespace geoshare::mesh {

// Closest point on triangle abc to p.
Eigen::Vector3d ClosestPointOnTriangle(const Eigen::Vector3d& p,
                                       const Eigen::Vector3d& a,
                                       const Eigen::Vector3d& b,
                                       const Eigen::Vector3d& c);

// Bounding volume hierarchy over the triangles of a mesh for closest-point
// queries. Holds its own copy of the geometry.
class TriangleBvh {
 public:
  explicit TriangleBvh(const TriangleMesh& mesh);

  bool empty() const { return triangles_.empty(); }

  struct Hit {
    Eigen::Vector3d point;
    std::uint32_t triangle = 0;  // index into the mesh's triangle list
    double distance = 0.0;
  };
  Hit Closest(const Eigen::Vector3d& p) const;
  // Same result; a triangle near p as `hint` speeds up the search.
  Hit Closest(const Eigen::Vector3d& p, std::uint32_t hint) const;

  // Distance from p to the nearest point on the surface.
  double Distance(const Eigen::Vector3d& p) const;
  Eigen::Vector3d ClosestPoint(const Eigen::Vector3d& p) const;

 private:
  struct Node {
    Aabb box;
    std::uint32_t begin = 0;  // leaf: range into order_; inner: left child
    std::uint32_t count = 0;  // 0 for inner nodes
    std::uint32_t right = 0;
  };

  std::uint32_t Build(std::uint32_t begin, std::uint32_t end);

  std::vector<Eigen::Vector3d> a_, b_, c_;
  std::vector<Eigen::Vector3d> centroids_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::vector<Triangle> triangles_;
};

}  // namespace geoshare::mesh
