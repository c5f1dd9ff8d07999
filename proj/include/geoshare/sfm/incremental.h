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
#include <map>
#include <string>
#include <vector>

#include "geoshare/sfm/bundle_adjustment.h"
#include "geoshare/sfm/geometry.h"
#include "geoshare/sfm/types.h"

namespace geoshare::sfm {

struct IncrementalConfig {
  RansacConfig ransac;
  BundleConfig bundle;
  // Seed pairs whose median triangulation angle is below this are rejected.
  double min_seed_angle_deg = 2.0;
  // Newly triangulated points need at least this angle between their rays.
  double min_triangulation_angle_deg = 1.0;
  // Observations reprojecting worse than this are dropped.
  double max_reprojection_px = 4.0;
  int min_registration_points = 6;
  std::uint64_t seed = 0;
};

struct UnregisteredImage {
  ImageId image_id = 0;
  std::string reason;
};

struct SeedPair {
  ImageId first = 0;
  ImageId second = 0;
  std::size_t inliers = 0;
  double median_angle_deg = 0.0;
  double score = 0.0;
};

struct IncrementalResult {
  Reconstruction reconstruction;
  SeedPair seed;
  std::vector<ImageId> registration_order;
  std::vector<UnregisteredImage> unregistered;
  std::vector<BundleSummary> bundle_runs;
};

// Two-view initialization from the best seed pair, then repeated PnP
// registration of the best-covered image, triangulation of new tracks and
// global bundle adjustment. The seed pair's first camera is the world origin
// and the seed baseline has unit length.
IncrementalResult IncrementalSfm(
    const std::vector<FeatureTrack>& tracks,
    const std::map<ImageId, CameraIntrinsics>& intrinsics,
    const IncrementalConfig& config = {});

}  // namespace geoshare::sfm
