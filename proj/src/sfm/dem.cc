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

#include "geoshare/sfm/dem.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace geoshare::sfm {
namespace {

constexpr double kInfluenceCells = 3.0;

struct BucketKey {
  long long x;
  long long y;
  bool operator==(const BucketKey&) const = default;
};

struct BucketHash {
  std::size_t operator()(const BucketKey& k) const noexcept {
    return std::hash<long long>()(k.x * 73856093LL ^ k.y * 19349663LL);
  }
};

}  // namespace

DemGrid BuildDem(const std::vector<Eigen::Vector3d>& points, const DemSpec& spec,
                 DemMethod method) {
  if (points.empty()) Fail(SfmErrc::kEmptyCloud, "no points to grid");
  if (!(spec.cell_size > 0.0) || spec.ncols <= 0 || spec.nrows <= 0) {
    Fail(SfmErrc::kInvalidArgument, "invalid DEM grid");
  }
  const double radius = kInfluenceCells * spec.cell_size;

  // Buckets of size `radius` so a query touches at most 3x3 buckets.
  std::unordered_map<BucketKey, std::vector<std::size_t>, BucketHash> buckets;
  auto key_of = [&](double x, double y) {
    return BucketKey{static_cast<long long>(std::floor((x - spec.x0) / radius)),
                     static_cast<long long>(std::floor((y - spec.y0) / radius))};
  };
  for (std::size_t i = 0; i < points.size(); ++i) {
    buckets[key_of(points[i].x(), points[i].y())].push_back(i);
  }

  DemGrid grid;
  grid.x0 = spec.x0;
  grid.y0 = spec.y0;
  grid.cell_size = spec.cell_size;
  grid.ncols = spec.ncols;
  grid.nrows = spec.nrows;
  grid.heights.assign(static_cast<std::size_t>(spec.ncols) * spec.nrows,
                      std::numeric_limits<double>::quiet_NaN());

  for (int row = 0; row < grid.nrows; ++row) {
    for (int col = 0; col < grid.ncols; ++col) {
      const Eigen::Vector2d c = grid.CellCenter(row, col);
      const BucketKey center = key_of(c.x(), c.y());
      double best_d2 = std::numeric_limits<double>::infinity();
      double nearest = std::numeric_limits<double>::quiet_NaN();
      std::size_t nearest_index = points.size();
      double weight_sum = 0.0;
      double value_sum = 0.0;
      int exact_count = 0;
      double exact_sum = 0.0;
      for (long long dy = -1; dy <= 1; ++dy) {
        for (long long dx = -1; dx <= 1; ++dx) {
          auto it = buckets.find({center.x + dx, center.y + dy});
          if (it == buckets.end()) continue;
          for (std::size_t i : it->second) {
            const double d2 = (points[i].head<2>() - c).squaredNorm();
            if (d2 > radius * radius) continue;
            if (d2 < best_d2 || (d2 == best_d2 && i < nearest_index)) {
              best_d2 = d2;
              nearest_index = i;
              nearest = points[i].z();
            }
            if (d2 < 1e-24) {
              // Coincident samples are averaged instead of weighted.
              exact_sum += points[i].z();
              ++exact_count;
            } else {
              weight_sum += 1.0 / d2;
              value_sum += points[i].z() / d2;
            }
          }
        }
      }
      double& h = grid.heights[static_cast<std::size_t>(row) * grid.ncols + col];
      if (method == DemMethod::kNearest) {
        h = nearest;
      } else if (exact_count > 0) {
        h = exact_sum / exact_count;
      } else if (weight_sum > 0.0) {
        h = value_sum / weight_sum;
      }
    }
  }
  return grid;
}

DemSpec FitDemSpec(const std::vector<Eigen::Vector3d>& points, double cell_size) {
  if (points.empty()) Fail(SfmErrc::kEmptyCloud, "no points to grid");
  if (!(cell_size > 0.0)) Fail(SfmErrc::kInvalidArgument, "cell size must be > 0");
  Eigen::Vector2d lo = points.front().head<2>();
  Eigen::Vector2d hi = lo;
  for (const auto& p : points) {
    lo = lo.cwiseMin(p.head<2>());
    hi = hi.cwiseMax(p.head<2>());
  }
  DemSpec spec;
  spec.x0 = lo.x();
  spec.y0 = lo.y();
  spec.cell_size = cell_size;
  spec.ncols = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / cell_size)));
  spec.nrows = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / cell_size)));
  return spec;
}

}  // namespace geoshare::sfm
