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

#include <vector>

#include <Eigen/Core>

#include "geoshare/sfm/types.h"

namespace geoshare::sfm {

struct DemSpec {
  double x0 = 0.0;  // lower-left corner
  double y0 = 0.0;
  double cell_size = 1.0;
  int ncols = 1;
  int nrows = 1;
};

enum class DemMethod { kNearest, kIdw };

// Grids a point cloud using the xy distance from each cell center. Only points
// within 3 cell sizes of a center contribute; cells without any are NaN.
// Inverse-distance weighting uses power 2.
DemGrid BuildDem(const std::vector<Eigen::Vector3d>& points, const DemSpec& spec,
                 DemMethod method);

// Grid spec covering the xy extent of `points` with the given cell size.
DemSpec FitDemSpec(const std::vector<Eigen::Vector3d>& points, double cell_size);

}  // namespace geoshare::sfm
