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
#include <map>
#include <string>
#include <vector>

#include "geoshare/sfm/types.h"

namespace geoshare::sfm {

// `track_id,image_id,u,v`; rows of one track need not be contiguous.
std::vector<FeatureTrack> ReadTracksCsv(std::istream& in);
void WriteTracksCsv(std::ostream& out, const std::vector<FeatureTrack>& tracks);

// `image_id,fx,fy,cx,cy,width,height`
std::map<ImageId, CameraIntrinsics> ReadIntrinsicsCsv(std::istream& in);
void WriteIntrinsicsCsv(std::ostream& out,
                        const std::map<ImageId, CameraIntrinsics>& intrinsics);

// Esri ASCII grid; NaN cells are written as -9999.
void WriteEsriAsciiGrid(std::ostream& out, const DemGrid& grid);
DemGrid ReadEsriAsciiGrid(std::istream& in);

}  // namespace geoshare::sfm
