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

#include "geoshare/mesh/closest_point.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>

namespace geoshare::mesh {
namespace {

constexpr std::uint32_t kLeafSize = 4;

}  // namespace

// Region tests follow the Voronoi-feature classification of the triangle.
Eigen::Vector3d ClosestPointOnTriangle(const Eigen::Vector3d& p,
                                       const Eigen::Vector3d& a,
                                       const Eigen::Vector3d& b,
                                       const Eigen::Vector3d& c) {
  const Eigen::Vector3d ab = b - a;
  const Eigen::Vector3d ac = c - a;
  const Eigen::Vector3d ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Eigen::Vector3d bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    return a + (d1 / (d1 - d3)) * ab;
  }

  const Eigen::Vector3d cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    return a + (d2 / (d2 - d6)) * ac;
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }

  const double denom = va + vb + vc;
  if (!(denom > 0.0)) {
    // Degenerate triangle: fall back to the closest edge point.
    Eigen::Vector3d best = a;
    double best_d = (p - a).squaredNorm();
    const std::pair<Eigen::Vector3d, Eigen::Vector3d> edges[] = {{a, b}, {b, c}, {a, c}};
    for (const auto& [s, e] : edges) {
      const Eigen::Vector3d d = e - s;
      const double len2 = d.squaredNorm();
      const double t = len2 > 0.0 ? std::clamp((p - s).dot(d) / len2, 0.0, 1.0) : 0.0;
      const Eigen::Vector3d q = s + t * d;
      if ((p - q).squaredNorm() < best_d) {
        best_d = (p - q).squaredNorm();
        best = q;
      }
    }
    return best;
  }
  const double v = vb / denom;
  const double w = vc / denom;
  return a + ab * v + ac * w;
}

TriangleBvh::TriangleBvh(const TriangleMesh& mesh) : triangles_(mesh.triangles) {
  const std::size_t n = triangles_.size();
  a_.reserve(n);
  b_.reserve(n);
  c_.reserve(n);
  for (const auto& t : triangles_) {
    a_.push_back(mesh.Position(t[0]));
    b_.push_back(mesh.Position(t[1]));
    c_.push_back(mesh.Position(t[2]));
    centroids_.push_back((a_.back() + b_.back() + c_.back()) / 3.0);
  }
  order_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) order_[i] = i;
  if (n > 0) {
    nodes_.reserve(2 * n / kLeafSize + 2);
    Build(0, static_cast<std::uint32_t>(n));
  }
}

std::uint32_t TriangleBvh::Build(std::uint32_t begin, std::uint32_t end) {
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb box = Aabb::FromPoint(a_[order_[begin]]);
  Aabb centroid_box = Aabb::FromPoint(centroids_[order_[begin]]);
  for (std::uint32_t i = begin; i < end; ++i) {
    const std::uint32_t t = order_[i];
    box.Expand(a_[t]);
    box.Expand(b_[t]);
    box.Expand(c_[t]);
    centroid_box.Expand(centroids_[t]);
  }
  nodes_[index].box = box;
  if (end - begin <= kLeafSize) {
    nodes_[index].begin = begin;
    nodes_[index].count = end - begin;
    return index;
  }
  int axis = 0;
  (centroid_box.max - centroid_box.min).maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t x, std::uint32_t y) {
                     const double cx = centroids_[x][axis];
                     const double cy = centroids_[y][axis];
                     return cx < cy || (cx == cy && x < y);
                   });
  const std::uint32_t left = Build(begin, mid);
  const std::uint32_t right = Build(mid, end);
  nodes_[index].begin = left;
  nodes_[index].right = right;
  return index;
}

TriangleBvh::Hit TriangleBvh::Closest(const Eigen::Vector3d& p) const {
  return Closest(p, std::numeric_limits<std::uint32_t>::max());
}

TriangleBvh::Hit TriangleBvh::Closest(const Eigen::Vector3d& p, std::uint32_t hint) const {
  if (nodes_.empty()) Fail(MeshErrc::kEmptyMesh, "closest point on an empty mesh");
  double best_d2 = std::numeric_limits<double>::infinity();
  Eigen::Vector3d best = Eigen::Vector3d::Zero();
  std::uint32_t best_triangle = 0;
  if (hint < a_.size()) {
    best = ClosestPointOnTriangle(p, a_[hint], b_[hint], c_[hint]);
    best_d2 = (best - p).squaredNorm();
    best_triangle = hint;
  }
  const auto box_d2 = [&p](const Aabb& box) {
    return (p.cwiseMax(box.min).cwiseMin(box.max) - p).squaredNorm();
  };
  // Depth is bounded by the median split, so a small fixed stack suffices.
  std::array<std::uint32_t, 128> stack;
  std::size_t top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (box_d2(node.box) > best_d2) continue;
    if (node.count > 0) {
      for (std::uint32_t i = node.begin; i < node.begin + node.count; ++i) {
        const std::uint32_t t = order_[i];
        const Eigen::Vector3d q = ClosestPointOnTriangle(p, a_[t], b_[t], c_[t]);
        const double d2 = (q - p).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && t < best_triangle)) {
          best_d2 = d2;
          best = q;
          best_triangle = t;
        }
      }
      continue;
    }
    // Visit the nearer child first.
    if (box_d2(nodes_[node.begin].box) < box_d2(nodes_[node.right].box)) {
      stack[top++] = node.right;
      stack[top++] = node.begin;
    } else {
      stack[top++] = node.begin;
      stack[top++] = node.right;
    }
  }
  return {best, best_triangle, std::sqrt(best_d2)};
}

Eigen::Vector3d TriangleBvh::ClosestPoint(const Eigen::Vector3d& p) const {
  return Closest(p).point;
}

double TriangleBvh::Distance(const Eigen::Vector3d& p) const {
  return Closest(p).distance;
}

}  // namespace geoshare::mesh
