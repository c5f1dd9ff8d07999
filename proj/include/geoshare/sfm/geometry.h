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

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "geoshare/sfm/types.h"

namespace geoshare::sfm {

// A correspondence between two images in normalized camera coordinates
// (pixel coordinates with the intrinsics removed).
struct CalibratedPair {
  Eigen::Vector2d x1;
  Eigen::Vector2d x2;
};

struct RansacConfig {
  // Sampson distance threshold in normalized coordinates.
  double threshold = 1e-3;
  int max_iterations = 2048;
  double confidence = 0.999;
  std::uint64_t seed = 0;
};

struct EssentialEstimate {
  Eigen::Matrix3d E = Eigen::Matrix3d::Zero();
  std::vector<bool> inlier_mask;
  std::size_t num_inliers = 0;
};

// Normalized 8-point algorithm with an exact rank-2, equal-singular-value
// projection. Requires at least 8 pairs.
Eigen::Matrix3d EightPointEssential(const std::vector<CalibratedPair>& pairs);

// First-order geometric (Sampson) distance of a pair to the epipolar
// constraint x2' E x1 = 0.
double SampsonDistance(const Eigen::Matrix3d& E, const CalibratedPair& pair);

// RANSAC over 8-point minimal samples, followed by a refit on all inliers.
EssentialEstimate EstimateEssential(const std::vector<CalibratedPair>& pairs,
                                    const RansacConfig& config);

// Relative motion x2 = R * x1 + t with |t| = 1.
struct RelativePose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::UnitX();
  // Points in front of both cameras for each of the four candidates, in the
  // order (R1, t), (R1, -t), (R2, t), (R2, -t).
  std::array<std::size_t, 4> candidate_support{};
  std::size_t selected = 0;
};

RelativePose DecomposeEssential(const Eigen::Matrix3d& E,
                                const std::vector<CalibratedPair>& pairs);

// Linear (DLT) two-view triangulation from pixel observations.
Eigen::Vector3d Triangulate(const Eigen::Vector2d& pixel_a,
                            const Eigen::Vector2d& pixel_b,
                            const CameraPose& pose_a, const CameraPose& pose_b,
                            const CameraIntrinsics& intrinsics_a,
                            const CameraIntrinsics& intrinsics_b);

inline Eigen::Vector3d Triangulate(const Eigen::Vector2d& pixel_a,
                                   const Eigen::Vector2d& pixel_b,
                                   const CameraPose& pose_a,
                                   const CameraPose& pose_b,
                                   const CameraIntrinsics& intrinsics) {
  return Triangulate(pixel_a, pixel_b, pose_a, pose_b, intrinsics, intrinsics);
}

// Angle in radians between the two viewing rays of `point`.
double TriangulationAngle(const Eigen::Vector3d& center_a,
                          const Eigen::Vector3d& center_b,
                          const Eigen::Vector3d& point);

struct PnpOptions {
  int max_iterations = 50;
  bool refine = true;
};

// Absolute pose from >= 6 non-coplanar 3D-2D correspondences: DLT estimate
// refined by Levenberg-Marquardt on the pixel reprojection error.
CameraPose SolvePnp(const std::vector<Eigen::Vector3d>& points,
                    const std::vector<Eigen::Vector2d>& pixels,
                    const CameraIntrinsics& intrinsics,
                    const PnpOptions& options = {});

// Derivatives of the pixel projection of `point` with respect to a left
// rotation increment (x_cam <- exp(w) x_cam), the camera center and the point.
struct ProjectionJacobians {
  Eigen::Vector2d pixel;
  Eigen::Matrix<double, 2, 3> d_rotation;
  Eigen::Matrix<double, 2, 3> d_center;
  Eigen::Matrix<double, 2, 3> d_point;
  double depth = 0.0;
};

ProjectionJacobians ComputeProjectionJacobians(const CameraIntrinsics& k,
                                               const CameraPose& pose,
                                               const Eigen::Vector3d& point);

// Returns exp(w) * q.
Eigen::Quaterniond ApplyRotationIncrement(const Eigen::Quaterniond& q,
                                          const Eigen::Vector3d& w);

// target ~= scale * rotation * source + translation, least squares.
struct Similarity {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double rmse = 0.0;

  Eigen::Vector3d operator()(const Eigen::Vector3d& p) const {
    return scale * (rotation * p) + translation;
  }
};

Similarity AlignSimilarity(const std::vector<Eigen::Vector3d>& source,
                           const std::vector<Eigen::Vector3d>& target);

// Applies a similarity to every point and pose of a reconstruction.
Reconstruction TransformReconstruction(const Reconstruction& recon,
                                       const Similarity& sim);

}  // namespace geoshare::sfm
