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

#include "geoshare/sfm/synthetic.h"

#include <cmath>
#include <numbers>
#include <random>

namespace geoshare::sfm {

CameraPose LookAt(const Eigen::Vector3d& center, const Eigen::Vector3d& target) {
  const Eigen::Vector3d forward = (target - center).normalized();
  Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  if (std::abs(forward.dot(up)) > 0.999) up = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d right = forward.cross(up).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d R;
  R.row(0) = right.transpose();
  R.row(1) = down.transpose();
  R.row(2) = forward.transpose();
  CameraPose pose;
  pose.rotation = Eigen::Quaterniond(R).normalized();
  pose.center = center;
  return pose;
}

SyntheticScene SynthesizeScene(const SceneConfig& config) {
  if (config.n_cameras < 2 || config.n_points < 8) {
    Fail(SfmErrc::kInvalidArgument, "scene needs >= 2 cameras and >= 8 points");
  }
  if (config.noise_px < 0.0 || config.outlier_rate < 0.0 ||
      config.outlier_rate > 1.0) {
    Fail(SfmErrc::kInvalidArgument, "noise and outlier rate out of range");
  }
  if (config.point_radius >= std::hypot(config.ring_radius, config.ring_height)) {
    Fail(SfmErrc::kInvalidArgument, "cameras must lie outside the point ball");
  }

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> uniform01(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  SyntheticScene scene;
  CameraIntrinsics k;
  k.fx = k.fy = config.focal_px;
  k.width = k.height = config.image_size_px;
  k.cx = k.cy = 0.5 * config.image_size_px;

  for (int c = 0; c < config.n_cameras; ++c) {
    const double angle = 2.0 * std::numbers::pi * c / config.n_cameras;
    const Eigen::Vector3d center(config.ring_radius * std::cos(angle),
                                 config.ring_radius * std::sin(angle),
                                 config.ring_height);
    const auto id = static_cast<ImageId>(c);
    scene.truth.intrinsics[id] = k;
    scene.truth.poses[id] = LookAt(center, Eigen::Vector3d::Zero());
  }

  for (int p = 0; p < config.n_points; ++p) {
    Eigen::Vector3d X;
    do {
      X = Eigen::Vector3d(unit(rng), unit(rng), unit(rng));
    } while (X.squaredNorm() > 1.0);
    X *= config.point_radius;
    const auto track_id = static_cast<TrackId>(p);
    scene.truth.points[track_id] = X;

    FeatureTrack track;
    track.track_id = track_id;
    for (const auto& [image, pose] : scene.truth.poses) {
      const Eigen::Vector2d exact = Project(k, pose, X);
      scene.truth.observations[track_id].push_back({image, exact});
      Eigen::Vector2d observed = exact;
      if (config.outlier_rate > 0.0 && uniform01(rng) < config.outlier_rate) {
        observed = Eigen::Vector2d(uniform01(rng) * k.width,
                                   uniform01(rng) * k.height);
        scene.outliers.emplace(track_id, image);
      } else if (config.noise_px > 0.0) {
        observed += config.noise_px * Eigen::Vector2d(noise(rng), noise(rng));
      }
      track.observations.push_back({image, observed});
    }
    scene.tracks.push_back(std::move(track));
  }
  return scene;
}

}  // namespace geoshare::sfm
