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

#include <Eigen/Core>

#include "geoshare/mesh/types.h"

namespace geoshare::mesh {

// Merges vertices within `epsilon` of an earlier kept vertex into it,
// remaps triangles and drops the ones that become degenerate (repeated index
// or area below 1e-12 of the squared bounding diagonal). Attributes of the
// first occurrence are kept.
TriangleMesh DedupVertices(const TriangleMesh& mesh, double epsilon);

// Area-weighted vertex normals. Vertices without incident area get +z.
// Throws kNoTriangles for a mesh without triangles.
TriangleMesh ComputeNormals(const TriangleMesh& mesh);

struct SimplifyResult {
  TriangleMesh mesh;
  // Largest distance from a removed vertex or an input face centroid to the
  // simplified surface.
  double max_deviation = 0.0;
  std::size_t collapses = 0;
};

// Quadric error metric edge collapse until at most ceil(ratio * M) triangles
// remain or no valid collapse is left. Vertices on non-manifold edges never
// move. Throws kInvalidRatio unless 0 < ratio <= 1.
SimplifyResult Simplify(const TriangleMesh& mesh, double target_ratio);

struct DeshadeResult {
  TriangleMesh mesh;
  Eigen::Vector3d light = Eigen::Vector3d::UnitZ();
  double ambient = 1.0;
  // False when no directional term was detected; colors are then unchanged.
  bool lit = true;
};

// Fits luminance = albedo * (ambient + max(0, n . light)) by alternating
// least squares and replaces colors by the recovered albedo with their
// chroma kept.
DeshadeResult Deshade(const TriangleMesh& mesh);

// Symmetric sampled Hausdorff distance: `n_samples` area-weighted surface
// samples plus every vertex of each mesh, measured against the other.
double HausdorffDistance(const TriangleMesh& a, const TriangleMesh& b,
                         int n_samples = 10000, std::uint64_t seed = 0);

}  // namespace geoshare::mesh
