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
#include <set>
#include <utility>
#include <vector>

#include "geoshare/sfm/types.h"

namespace geoshare::sfm {

struct SceneConfig {
  int n_cameras = 5;
  int n_points = 100;
  double noise_px = 0.0;
  double outlier_rate = 0.0;
  std::uint64_t seed = 42;

  // Geometry of the generator: cameras on a horizontal ring looking at the
  // origin, points uniform in a ball.
  double ring_radius = 8.0;
  double ring_height = 3.0;
  double point_radius = 2.0;
  double focal_px = 1000.0;
  int image_size_px = 1000;
};

struct SyntheticScene {
  // Ground truth with exact (noise-free) observations.
  Reconstruction truth;
  // Observed tracks with noise and outliers applied.
  std::vector<FeatureTrack> tracks;
  // (track, image) pairs whose observation was replaced by an outlier.
  std::set<std::pair<TrackId, ImageId>> outliers;
};

// Deterministic for a given config. Every point is seen by every camera with
// positive depth. Image ids are 0..n_cameras-1, track ids 0..n_points-1.
SyntheticScene SynthesizeScene(const SceneConfig& config);

// Pose of a camera at `center` looking at `target` with world +z as up.
CameraPose LookAt(const Eigen::Vector3d& center, const Eigen::Vector3d& target);

}  // namespace geoshare::sfm
