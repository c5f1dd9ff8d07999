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

#include "geoshare/sfm/bundle_adjustment.h"

#include <cmath>
#include <map>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "geoshare/sfm/geometry.h"

namespace geoshare::sfm {
namespace {

Eigen::Matrix<double, 3, 2> TangentBasis(const Eigen::Vector3d& axis) {
  Eigen::Vector3d helper = Eigen::Vector3d::UnitX();
  if (std::abs(axis.x()) > 0.9) helper = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d u = axis.cross(helper).normalized();
  const Eigen::Vector3d v = axis.cross(u).normalized();
  Eigen::Matrix<double, 3, 2> basis;
  basis << u, v;
  return basis;
}

}  // namespace

BundleGauge BundleGauge::Default(const Reconstruction& recon) {
  if (recon.poses.size() < 2) {
    Fail(SfmErrc::kInvalidArgument, "bundle adjustment needs two cameras");
  }
  auto it = recon.poses.begin();
  BundleGauge gauge;
  gauge.fixed_image = it->first;
  gauge.scale_image = std::next(it)->first;
  return gauge;
}

BundleProblem::BundleProblem(const Reconstruction& recon,
                             const BundleGauge& gauge)
    : base_(recon), gauge_(gauge) {
  if (!recon.poses.contains(gauge.fixed_image) ||
      !recon.poses.contains(gauge.scale_image) ||
      gauge.fixed_image == gauge.scale_image) {
    Fail(SfmErrc::kInvalidArgument, "gauge images must be two registered images");
  }
  const Eigen::Vector3d fixed_center = recon.poses.at(gauge.fixed_image).center;
  std::map<ImageId, int> camera_index;
  int offset = 0;
  for (const auto& [image, pose] : recon.poses) {
    CameraBlock block;
    block.image = image;
    if (image == gauge.fixed_image) {
      block.offset = -1;
      block.size = 0;
    } else if (image == gauge.scale_image) {
      const Eigen::Vector3d baseline = pose.center - fixed_center;
      scale_baseline_ = baseline.norm();
      if (!(scale_baseline_ > 0.0)) {
        Fail(SfmErrc::kInvalidArgument, "gauge cameras share a center");
      }
      block.offset = offset;
      block.size = 5;
      block.tangent = TangentBasis(baseline / scale_baseline_);
    } else {
      block.offset = offset;
      block.size = 6;
    }
    offset += block.size;
    camera_index[image] = static_cast<int>(cameras_.size());
    cameras_.push_back(block);
  }
  num_camera_parameters_ = offset;

  for (const auto& [track, obs_list] : recon.observations) {
    if (obs_list.empty()) continue;
    if (!recon.points.contains(track)) {
      Fail(SfmErrc::kInvalidArgument,
           "observation list for missing point " + std::to_string(track));
    }
    const int point = static_cast<int>(point_ids_.size());
    point_ids_.push_back(track);
    for (const auto& obs : obs_list) {
      auto it = camera_index.find(obs.image_id);
      if (it == camera_index.end()) {
        Fail(SfmErrc::kInvalidArgument,
             "observation in unregistered image " + std::to_string(obs.image_id));
      }
      obs_.push_back({it->second, point, obs.pixel});
    }
  }
  num_parameters_ =
      num_camera_parameters_ + 3 * static_cast<Eigen::Index>(point_ids_.size());
}

CameraPose BundleProblem::PerturbedPose(int camera,
                                        const Eigen::VectorXd& delta) const {
  const CameraBlock& block = cameras_[camera];
  CameraPose pose = base_.poses.at(block.image);
  if (block.size == 0) return pose;
  const Eigen::Vector3d w = delta.segment<3>(block.offset);
  pose.rotation = ApplyRotationIncrement(pose.rotation, w);
  if (block.size == 6) {
    pose.center += delta.segment<3>(block.offset + 3);
  } else {
    const Eigen::Vector3d fixed_center = base_.poses.at(gauge_.fixed_image).center;
    const Eigen::Vector3d axis = (pose.center - fixed_center) / scale_baseline_;
    const Eigen::Vector3d moved =
        axis + block.tangent * delta.segment<2>(block.offset + 3);
    pose.center = fixed_center + scale_baseline_ * moved.normalized();
  }
  return pose;
}

Eigen::VectorXd BundleProblem::Residuals(const Eigen::VectorXd& delta) const {
  std::vector<CameraPose> poses;
  poses.reserve(cameras_.size());
  for (int c = 0; c < static_cast<int>(cameras_.size()); ++c) {
    poses.push_back(PerturbedPose(c, delta));
  }
  Eigen::VectorXd r(NumResiduals());
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    const auto& o = obs_[i];
    const Eigen::Vector3d X = base_.points.at(point_ids_[o.point]) +
                              delta.segment<3>(PointOffset(o.point));
    const auto& k = base_.intrinsics.at(cameras_[o.camera].image);
    r.segment<2>(2 * static_cast<Eigen::Index>(i)) =
        Project(k, poses[o.camera], X) - o.pixel;
  }
  return r;
}

void BundleProblem::Linearize(int observation, Eigen::Vector2d* residual,
                              Eigen::Matrix<double, 2, 6>* d_camera,
                              Eigen::Matrix<double, 2, 3>* d_point) const {
  const auto& o = obs_[observation];
  const CameraBlock& block = cameras_[o.camera];
  const auto& k = base_.intrinsics.at(block.image);
  const auto j = ComputeProjectionJacobians(k, base_.poses.at(block.image),
                                            base_.points.at(point_ids_[o.point]));
  *residual = j.pixel - o.pixel;
  d_camera->setZero();
  if (block.size == 6) {
    d_camera->leftCols<3>() = j.d_rotation;
    d_camera->block<2, 3>(0, 3) = j.d_center;
  } else if (block.size == 5) {
    d_camera->leftCols<3>() = j.d_rotation;
    d_camera->block<2, 2>(0, 3) = scale_baseline_ * j.d_center * block.tangent;
  }
  *d_point = j.d_point;
}

Eigen::SparseMatrix<double> BundleProblem::Jacobian() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(obs_.size() * 18);
  Eigen::Vector2d r;
  Eigen::Matrix<double, 2, 6> jc;
  Eigen::Matrix<double, 2, 3> jp;
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    Linearize(static_cast<int>(i), &r, &jc, &jp);
    const auto row = 2 * static_cast<Eigen::Index>(i);
    const CameraBlock& block = cameras_[obs_[i].camera];
    for (int a = 0; a < 2; ++a) {
      for (int c = 0; c < block.size; ++c) {
        triplets.emplace_back(row + a, block.offset + c, jc(a, c));
      }
      for (int c = 0; c < 3; ++c) {
        triplets.emplace_back(row + a, PointOffset(obs_[i].point) + c, jp(a, c));
      }
    }
  }
  Eigen::SparseMatrix<double> J(NumResiduals(), NumParameters());
  J.setFromTriplets(triplets.begin(), triplets.end());
  return J;
}

Reconstruction BundleProblem::Apply(const Eigen::VectorXd& delta) const {
  Reconstruction out = base_;
  for (int c = 0; c < static_cast<int>(cameras_.size()); ++c) {
    out.poses[cameras_[c].image] = PerturbedPose(c, delta);
  }
  for (std::size_t p = 0; p < point_ids_.size(); ++p) {
    out.points[point_ids_[p]] += delta.segment<3>(PointOffset(static_cast<int>(p)));
  }
  return out;
}

BundleResult BundleAdjust(const Reconstruction& recon,
                          const BundleConfig& config) {
  const BundleGauge gauge = config.gauge.value_or(BundleGauge::Default(recon));
  BundleResult result;
  result.reconstruction = recon;
  BundleSummary& summary = result.summary;
  double cost = TotalSquaredError(recon);
  summary.initial_cost = cost;
  summary.final_cost = cost;
  summary.cost_history.push_back(cost);

  double scene_scale = 1.0;
  for (const auto& [id, p] : recon.points) scene_scale = std::max(scene_scale, p.norm());

  double lambda = config.initial_damping;
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    summary.iterations = iter + 1;
    const BundleProblem problem(result.reconstruction, gauge);
    const Eigen::Index nc = problem.NumCameraParameters();
    const auto& cams = problem.cameras();
    const auto& obs = problem.observations();
    const int num_points =
        static_cast<int>((problem.NumParameters() - nc) / 3);

    // Normal equations H = J'J, b = -J'r split into camera/point blocks.
    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(nc, nc);
    Eigen::VectorXd bc = Eigen::VectorXd::Zero(nc);
    std::vector<Eigen::Matrix3d> V(num_points, Eigen::Matrix3d::Zero());
    std::vector<Eigen::Vector3d> bp(num_points, Eigen::Vector3d::Zero());
    std::vector<Eigen::Matrix<double, 6, 3>> W(obs.size());
    std::vector<std::vector<int>> point_obs(num_points);

    Eigen::Vector2d r;
    Eigen::Matrix<double, 2, 6> jc;
    Eigen::Matrix<double, 2, 3> jp;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      problem.Linearize(static_cast<int>(i), &r, &jc, &jp);
      const auto& block = cams[obs[i].camera];
      const int p = obs[i].point;
      point_obs[p].push_back(static_cast<int>(i));
      V[p] += jp.transpose() * jp;
      bp[p] -= jp.transpose() * r;
      W[i] = jc.transpose() * jp;
      if (block.size > 0) {
        const int s = block.size;
        U.block(block.offset, block.offset, s, s) +=
            jc.leftCols(s).transpose() * jc.leftCols(s);
        bc.segment(block.offset, s) -= jc.leftCols(s).transpose() * r;
      }
    }

    double grad_norm = bc.size() > 0 ? bc.lpNorm<Eigen::Infinity>() : 0.0;
    for (const auto& g : bp) grad_norm = std::max(grad_norm, g.lpNorm<Eigen::Infinity>());
    if (grad_norm < config.gradient_tolerance) {
      summary.converged = true;
      summary.termination = "gradient_tolerance";
      return result;
    }

    bool accepted = false;
    bool stop = false;
    while (!accepted && !stop) {
      Eigen::MatrixXd S = U;
      for (Eigen::Index d = 0; d < nc; ++d) {
        S(d, d) += lambda * std::max(U(d, d), 1e-12);
      }
      Eigen::VectorXd rhs = bc;
      std::vector<Eigen::Matrix3d> V_inv(num_points);
      bool singular = false;
      for (int p = 0; p < num_points; ++p) {
        Eigen::Matrix3d Vd = V[p];
        for (int d = 0; d < 3; ++d) Vd(d, d) += lambda * std::max(V[p](d, d), 1e-12);
        bool invertible = false;
        Vd.computeInverseWithCheck(V_inv[p], invertible);
        if (!invertible) {
          singular = true;
          break;
        }
        const auto& po = point_obs[p];
        for (int a : po) {
          const auto& ba = cams[obs[a].camera];
          if (ba.size == 0) continue;
          const Eigen::Matrix<double, 6, 3> WV = W[a] * V_inv[p];
          rhs.segment(ba.offset, ba.size) -= (WV * bp[p]).head(ba.size);
          for (int b : po) {
            const auto& bb = cams[obs[b].camera];
            if (bb.size == 0) continue;
            S.block(ba.offset, bb.offset, ba.size, bb.size) -=
                (WV * W[b].transpose()).topLeftCorner(ba.size, bb.size);
          }
        }
      }

      Eigen::VectorXd delta = Eigen::VectorXd::Zero(problem.NumParameters());
      if (!singular && nc > 0) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
          singular = true;
        } else {
          delta.head(nc) = ldlt.solve(rhs);
          singular = !delta.head(nc).allFinite();
        }
      }
      if (!singular) {
        for (int p = 0; p < num_points; ++p) {
          Eigen::Vector3d b = bp[p];
          for (int a : point_obs[p]) {
            const auto& ba = cams[obs[a].camera];
            if (ba.size == 0) continue;
            b -= W[a].topRows(ba.size).transpose() * delta.segment(ba.offset, ba.size);
          }
          delta.segment<3>(problem.PointOffset(p)) = V_inv[p] * b;
        }
        singular = !delta.allFinite();
      }

      if (singular) {
        lambda *= config.damping_increase;
        if (lambda > 1e16) {
          Fail(SfmErrc::kSingularNormalEquations,
               "damped normal equations could not be solved");
        }
        continue;
      }

      const Reconstruction trial = problem.Apply(delta);
      const double trial_cost = TotalSquaredError(trial);
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        const double relative = (cost - trial_cost) / cost;
        result.reconstruction = trial;
        cost = trial_cost;
        summary.final_cost = cost;
        summary.cost_history.push_back(cost);
        ++summary.accepted_steps;
        lambda = std::max(lambda * config.damping_decrease, 1e-15);
        accepted = true;
        if (relative < config.relative_cost_tolerance || cost == 0.0) {
          summary.converged = true;
          summary.termination = "relative_cost_tolerance";
          return result;
        }
      } else {
        if (delta.norm() < 1e-15 * scene_scale) {
          summary.converged = true;
          summary.termination = "step_tolerance";
          return result;
        }
        lambda *= config.damping_increase;
        if (lambda > 1e16) stop = true;
      }
    }
    if (stop) {
      // No descent direction left at working precision.
      summary.converged = true;
      summary.termination = "no_further_decrease";
      return result;
    }
  }
  summary.converged = false;
  summary.termination = "max_iterations";
  return result;
}

}  // namespace geoshare::sfm
