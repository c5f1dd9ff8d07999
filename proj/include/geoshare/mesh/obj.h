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

#include <iosfwd>
#include <string>

#include "geoshare/mesh/types.h"

namespace geoshare::mesh {

// Wavefront OBJ subset: `v x y z [r g b]` with colors in [0, 1], `vn`, and
// `f` in the v, v//vn, v/vt and v/vt/vn forms with positive or negative
// indices. Polygons are fan-triangulated; texture coordinates, groups and
// materials are ignored. A vertex takes the first normal a face assigns it.
TriangleMesh ReadObj(std::istream& in);
TriangleMesh ReadObjFile(const std::string& path);

// Writes `v` (with colors when present), `vn` per vertex and `f v//vn`
// faces, or plain `f v` faces for meshes without normals.
void WriteObj(std::ostream& out, const TriangleMesh& mesh);
void WriteObjFile(const std::string& path, const TriangleMesh& mesh);

}  // namespace geoshare::mesh
