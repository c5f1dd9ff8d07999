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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "geoshare/sfm/types.h"

namespace geoshare::sfm {

// The first gauge image is held fixed; the second may rotate freely but its
// center moves on a sphere around the first, which pins the baseline length
// and therefore the scale.
struct BundleGauge {
  ImageId fixed_image = 0;
  ImageId scale_image = 0;

  // First two registered image ids in ascending order.
  static BundleGauge Default(const Reconstruction& recon);
};

struct BundleConfig {
  int max_iterations = 100;
  double gradient_tolerance = 1e-10;
  double relative_cost_tolerance = 1e-12;
  double initial_damping = 1e-3;
  double damping_increase = 10.0;
  double damping_decrease = 0.1;
  std::optional<BundleGauge> gauge;
};

struct BundleSummary {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  int accepted_steps = 0;
  bool converged = false;
  std::string termination;
  // Objective value after every accepted step, starting with the initial one.
  std::vector<double> cost_history;
};

struct BundleResult {
  Reconstruction reconstruction;
  BundleSummary summary;
};

// Parameter layout of a bundle problem linearized at a reconstruction.
// Camera blocks come first (6 for free cameras, 5 for the scale-gauge camera,
// none for the fixed camera), followed by 3 per point. Increments are applied
// as left rotation increments and additive center/point updates; the scale
// camera's two parameters move its center along the tangent plane of the
// baseline sphere.
class BundleProblem {
 public:
  BundleProblem(const Reconstruction& recon, const BundleGauge& gauge);

  Eigen::Index NumParameters() const { return num_parameters_; }
  Eigen::Index NumResiduals() const { return 2 * static_cast<Eigen::Index>(obs_.size()); }
  Eigen::Index NumCameraParameters() const { return num_camera_parameters_; }

  // Residuals (projected - observed) after applying `delta`.
  Eigen::VectorXd Residuals(const Eigen::VectorXd& delta) const;
  // Analytic Jacobian of Residuals at delta = 0.
  Eigen::SparseMatrix<double> Jacobian() const;

  Reconstruction Apply(const Eigen::VectorXd& delta) const;
  const Reconstruction& Base() const { return base_; }

  struct CameraBlock {
    ImageId image = 0;
    int offset = -1;  // -1 for the fixed camera
    int size = 0;
    Eigen::Matrix<double, 3, 2> tangent = Eigen::Matrix<double, 3, 2>::Zero();
  };
  struct ObservationRef {
    int camera = 0;  // index into cameras()
    int point = 0;   // index into point order
    Eigen::Vector2d pixel;
  };

  const std::vector<CameraBlock>& cameras() const { return cameras_; }
  const std::vector<ObservationRef>& observations() const { return obs_; }
  Eigen::Index PointOffset(int point) const {
    return num_camera_parameters_ + 3 * static_cast<Eigen::Index>(point);
  }

  // Residual and Jacobian blocks of one observation at delta = 0. The camera
  // block has `cameras()[camera].size` meaningful columns.
  void Linearize(int observation, Eigen::Vector2d* residual,
                 Eigen::Matrix<double, 2, 6>* d_camera,
                 Eigen::Matrix<double, 2, 3>* d_point) const;

 private:
  CameraPose PerturbedPose(int camera, const Eigen::VectorXd& delta) const;

  Reconstruction base_;
  BundleGauge gauge_;
  std::vector<CameraBlock> cameras_;
  std::vector<TrackId> point_ids_;
  std::vector<ObservationRef> obs_;
  Eigen::Index num_camera_parameters_ = 0;
  Eigen::Index num_parameters_ = 0;
  double scale_baseline_ = 0.0;
};

// Levenberg-Marquardt over all poses and points, solved through the Schur
// complement on the camera block. Objective = sum of squared pixel residuals.
// Throws kSingularNormalEquations when the damped system cannot be solved.
BundleResult BundleAdjust(const Reconstruction& recon,
                          const BundleConfig& config = {});

}  // namespace geoshare::sfm
