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

#include "geoshare/sfm/types.h"

#include <cmath>

namespace geoshare::sfm {

const char* ToString(SfmErrc code) {
  switch (code) {
    case SfmErrc::kTooFewCorrespondences: return "TooFewCorrespondences";
    case SfmErrc::kDegenerateConfiguration: return "DegenerateConfiguration";
    case SfmErrc::kCheiralityAmbiguous: return "CheiralityAmbiguous";
    case SfmErrc::kInsufficientBaseline: return "InsufficientBaseline";
    case SfmErrc::kPointAtInfinity: return "PointAtInfinity";
    case SfmErrc::kNegativeDepth: return "NegativeDepth";
    case SfmErrc::kTooFewPoints: return "TooFewPoints";
    case SfmErrc::kDegenerateGeometry: return "DegenerateGeometry";
    case SfmErrc::kSingularNormalEquations: return "SingularNormalEquations";
    case SfmErrc::kNoValidSeedPair: return "NoValidSeedPair";
    case SfmErrc::kReconstructionCollapsed: return "ReconstructionCollapsed";
    case SfmErrc::kEmptyCloud: return "EmptyCloud";
    case SfmErrc::kInvalidArgument: return "InvalidArgument";
    case SfmErrc::kParseError: return "ParseError";
  }
  return "Unknown";
}

void Fail(SfmErrc code, const std::string& message) {
  throw SfmError(code, std::string("sfm: ") + ToString(code) + ": " + message);
}

void CameraIntrinsics::Validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    Fail(SfmErrc::kInvalidArgument, "focal lengths must be positive");
  }
  if (!(cx >= 0.0 && cx <= width) || !(cy >= 0.0 && cy <= height)) {
    Fail(SfmErrc::kInvalidArgument, "principal point outside the image");
  }
}

Eigen::Matrix3d CameraIntrinsics::K() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

CameraPose CameraPose::FromRt(const Eigen::Matrix3d& R,
                              const Eigen::Vector3d& t) {
  CameraPose pose;
  pose.rotation = Eigen::Quaterniond(R).normalized();
  pose.center = -R.transpose() * t;
  return pose;
}

const Observation* FeatureTrack::Find(ImageId image) const {
  for (const auto& obs : observations) {
    if (obs.image_id == image) return &obs;
  }
  return nullptr;
}

std::size_t Reconstruction::NumObservations() const {
  std::size_t n = 0;
  for (const auto& [id, obs] : observations) n += obs.size();
  return n;
}

Eigen::Vector2d Project(const CameraIntrinsics& intrinsics,
                        const CameraPose& pose, const Eigen::Vector3d& point,
                        double* depth) {
  const Eigen::Vector3d pc = pose.ToCamera(point);
  if (depth != nullptr) *depth = pc.z();
  return intrinsics.ToPixel(pc.hnormalized());
}

double RotationAngle(const Eigen::Quaterniond& a,
                     const Eigen::Quaterniond& b) {
  return a.angularDistance(b);
}

double TotalSquaredError(const Reconstruction& recon) {
  double sum = 0.0;
  for (const auto& [track, obs_list] : recon.observations) {
    const auto& point = recon.points.at(track);
    for (const auto& obs : obs_list) {
      const Eigen::Vector2d r = Project(recon.intrinsics.at(obs.image_id),
                             recon.poses.at(obs.image_id), point) -
                     obs.pixel;
      sum += r.squaredNorm();
    }
  }
  return sum;
}

double MeanReprojectionError(const Reconstruction& recon) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [track, obs_list] : recon.observations) {
    const auto& point = recon.points.at(track);
    for (const auto& obs : obs_list) {
      sum += (Project(recon.intrinsics.at(obs.image_id),
                      recon.poses.at(obs.image_id), point) -
              obs.pixel)
                 .norm();
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double RmsReprojectionError(const Reconstruction& recon) {
  const std::size_t n = recon.NumObservations();
  return n == 0 ? 0.0 : std::sqrt(TotalSquaredError(recon) /
                                  static_cast<double>(n));
}

}  // namespace geoshare::sfm
