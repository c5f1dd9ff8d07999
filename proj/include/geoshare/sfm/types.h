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

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "geoshare/common/error.h"

namespace geoshare::sfm {

enum class SfmErrc {
  kTooFewCorrespondences,
  kDegenerateConfiguration,
  kCheiralityAmbiguous,
  kInsufficientBaseline,
  kPointAtInfinity,
  kNegativeDepth,
  kTooFewPoints,
  kDegenerateGeometry,
  kSingularNormalEquations,
  kNoValidSeedPair,
  kReconstructionCollapsed,
  kEmptyCloud,
  kInvalidArgument,
  kParseError,
};

using SfmError = Error<SfmErrc>;

const char* ToString(SfmErrc code);

// Throws SfmError with an "sfm: " prefixed message.
[[noreturn]] void Fail(SfmErrc code, const std::string& message);

using ImageId = std::uint32_t;
using TrackId = std::uint32_t;

// Pinhole camera without lens distortion.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double width = 0.0;
  double height = 0.0;

  // Throws kInvalidArgument when the invariants do not hold.
  void Validate() const;

  Eigen::Vector2d ToNormalized(const Eigen::Vector2d& pixel) const {
    return {(pixel.x() - cx) / fx, (pixel.y() - cy) / fy};
  }
  Eigen::Vector2d ToPixel(const Eigen::Vector2d& normalized) const {
    return {normalized.x() * fx + cx, normalized.y() * fy + cy};
  }
  Eigen::Matrix3d K() const;
};

// World-to-camera rotation plus the camera center in world coordinates, so
// x_cam = R * (X - C).
struct CameraPose {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d center = Eigen::Vector3d::Zero();

  static CameraPose FromRt(const Eigen::Matrix3d& R, const Eigen::Vector3d& t);

  Eigen::Matrix3d R() const { return rotation.toRotationMatrix(); }
  Eigen::Vector3d t() const { return -(rotation * center); }
  Eigen::Vector3d ToCamera(const Eigen::Vector3d& world) const {
    return rotation * (world - center);
  }
};

struct Observation {
  ImageId image_id = 0;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
};

struct FeatureTrack {
  TrackId track_id = 0;
  std::vector<Observation> observations;

  const Observation* Find(ImageId image) const;
};

struct Reconstruction {
  std::map<ImageId, CameraIntrinsics> intrinsics;
  std::map<ImageId, CameraPose> poses;
  std::map<TrackId, Eigen::Vector3d> points;
  // Observations used by each point; only registered images appear here.
  std::map<TrackId, std::vector<Observation>> observations;

  std::size_t NumObservations() const;
};

// Regular height grid. Row 0 is the northern-most row (Esri ASCII order),
// origin is the lower-left corner of the grid.
struct DemGrid {
  double x0 = 0.0;
  double y0 = 0.0;
  double cell_size = 1.0;
  int ncols = 0;
  int nrows = 0;
  std::vector<double> heights;

  double At(int row, int col) const { return heights[row * ncols + col]; }
  Eigen::Vector2d CellCenter(int row, int col) const {
    return {x0 + (col + 0.5) * cell_size,
            y0 + (nrows - row - 0.5) * cell_size};
  }
};

// Pixel projection; depth in the camera frame is reported through `depth`.
Eigen::Vector2d Project(const CameraIntrinsics& intrinsics,
                        const CameraPose& pose, const Eigen::Vector3d& point,
                        double* depth = nullptr);

// Angle in radians of the relative rotation between two quaternions.
double RotationAngle(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

// Squared reprojection error summed over every observation of `recon`.
double TotalSquaredError(const Reconstruction& recon);
double MeanReprojectionError(const Reconstruction& recon);
double RmsReprojectionError(const Reconstruction& recon);

}  // namespace geoshare::sfm
