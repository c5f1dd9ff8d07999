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

#include "geoshare/mesh/types.h"

namespace geoshare::mesh {

// Subdivided icosahedron projected onto a sphere: 20 * 4^subdivisions faces.
TriangleMesh Icosphere(int subdivisions, double radius = 1.0);

// Unit cube [0,1]^3 as 12 triangles; with `shared` false every triangle
// has its own three vertices (36 in total).
TriangleMesh UnitCube(bool shared = true);

// n x n quads in the z = 0 plane spanning [0, size]^2, split into triangles.
TriangleMesh PlanarGrid(int n, double size = 1.0);

}  // namespace geoshare::mesh
