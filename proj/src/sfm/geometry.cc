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

#include "geoshare/sfm/geometry.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

namespace geoshare::sfm {
namespace {

constexpr int kMinimalSampleSize = 8;

Eigen::Matrix3d Skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

// Isotropic (Hartley) normalization: centroid to origin, mean distance sqrt(2).
Eigen::Matrix3d NormalizationTransform(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  double dist = 0.0;
  for (const auto& p : pts) dist += (p - mean).norm();
  dist /= static_cast<double>(pts.size());
  const double s = dist > 0.0 ? std::sqrt(2.0) / dist : 1.0;
  Eigen::Matrix3d T;
  T << s, 0.0, -s * mean.x(), 0.0, s, -s * mean.y(), 0.0, 0.0, 1.0;
  return T;
}

Eigen::Matrix3d EnforceRankTwo(const Eigen::Matrix3d& F) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(F,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s = svd.singularValues();
  s(2) = 0.0;
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

Eigen::Matrix3d EnforceEssentialConstraints(const Eigen::Matrix3d& F) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(F,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d s = svd.singularValues();
  const double sigma = 0.5 * (s(0) + s(1));
  Eigen::Matrix3d E = svd.matrixU() *
                      Eigen::Vector3d(sigma, sigma, 0.0).asDiagonal() *
                      svd.matrixV().transpose();
  return E / E.norm();
}

std::size_t CountInliers(const Eigen::Matrix3d& E,
                         const std::vector<CalibratedPair>& pairs,
                         double threshold, std::vector<bool>* mask) {
  std::size_t count = 0;
  mask->assign(pairs.size(), false);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (SampsonDistance(E, pairs[i]) < threshold) {
      (*mask)[i] = true;
      ++count;
    }
  }
  return count;
}

// Triangulates in the frame of camera 1 ([I|0]) against [R|t] using
// normalized coordinates. Returns false when the point is at infinity.
bool TriangulateNormalized(const Eigen::Vector2d& x1, const Eigen::Vector2d& x2,
                           const Eigen::Matrix3d& R, const Eigen::Vector3d& t,
                           Eigen::Vector3d* point) {
  Eigen::Matrix<double, 3, 4> P1 = Eigen::Matrix<double, 3, 4>::Zero();
  P1.leftCols<3>().setIdentity();
  Eigen::Matrix<double, 3, 4> P2;
  P2.leftCols<3>() = R;
  P2.col(3) = t;
  Eigen::Matrix4d A;
  A.row(0) = x1.x() * P1.row(2) - P1.row(0);
  A.row(1) = x1.y() * P1.row(2) - P1.row(1);
  A.row(2) = x2.x() * P2.row(2) - P2.row(0);
  A.row(3) = x2.y() * P2.row(2) - P2.row(1);
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(A, Eigen::ComputeFullV);
  const Eigen::Vector4d X = svd.matrixV().col(3);
  if (std::abs(X(3)) < 1e-12) return false;
  *point = X.head<3>() / X(3);
  return true;
}

}  // namespace

Eigen::Matrix3d EightPointEssential(const std::vector<CalibratedPair>& pairs) {
  if (pairs.size() < kMinimalSampleSize) {
    Fail(SfmErrc::kTooFewCorrespondences,
         "8-point estimation needs at least 8 pairs, got " +
             std::to_string(pairs.size()));
  }
  std::vector<Eigen::Vector2d> p1, p2;
  p1.reserve(pairs.size());
  p2.reserve(pairs.size());
  for (const auto& pair : pairs) {
    p1.push_back(pair.x1);
    p2.push_back(pair.x2);
  }
  const Eigen::Matrix3d T1 = NormalizationTransform(p1);
  const Eigen::Matrix3d T2 = NormalizationTransform(p2);

  Eigen::MatrixXd A(pairs.size(), 9);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Eigen::Vector3d a = T1 * p1[i].homogeneous();
    const Eigen::Vector3d b = T2 * p2[i].homogeneous();
    A.row(static_cast<Eigen::Index>(i)) << b.x() * a.x(), b.x() * a.y(),
        b.x() * a.z(), b.y() * a.x(), b.y() * a.y(), b.y() * a.z(),
        b.z() * a.x(), b.z() * a.y(), b.z() * a.z();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd e = svd.matrixV().col(8);
  Eigen::Matrix3d F;
  F << e(0), e(1), e(2), e(3), e(4), e(5), e(6), e(7), e(8);
  F = EnforceRankTwo(F);
  return EnforceEssentialConstraints(T2.transpose() * F * T1);
}

double SampsonDistance(const Eigen::Matrix3d& E, const CalibratedPair& pair) {
  const Eigen::Vector3d x1 = pair.x1.homogeneous();
  const Eigen::Vector3d x2 = pair.x2.homogeneous();
  const Eigen::Vector3d Ex1 = E * x1;
  const Eigen::Vector3d Etx2 = E.transpose() * x2;
  const double num = x2.dot(Ex1);
  const double den = Ex1.head<2>().squaredNorm() + Etx2.head<2>().squaredNorm();
  if (den <= 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(num) / std::sqrt(den);
}

EssentialEstimate EstimateEssential(const std::vector<CalibratedPair>& pairs,
                                    const RansacConfig& config) {
  if (pairs.size() < kMinimalSampleSize) {
    Fail(SfmErrc::kTooFewCorrespondences,
         "need at least 8 correspondences, got " + std::to_string(pairs.size()));
  }
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> indices(pairs.size());
  std::iota(indices.begin(), indices.end(), 0);

  EssentialEstimate best;
  std::vector<bool> mask;
  std::vector<CalibratedPair> sample(kMinimalSampleSize);
  const double n = static_cast<double>(pairs.size());
  int required = config.max_iterations;
  for (int iter = 0; iter < std::min(required, config.max_iterations); ++iter) {
    // Partial Fisher-Yates shuffle draws 8 distinct indices.
    for (int k = 0; k < kMinimalSampleSize; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, indices.size() - 1);
      std::swap(indices[k], indices[pick(rng)]);
      sample[k] = pairs[indices[k]];
    }
    const Eigen::Matrix3d E = EightPointEssential(sample);
    const std::size_t count = CountInliers(E, pairs, config.threshold, &mask);
    if (count > best.num_inliers) {
      best.E = E;
      best.num_inliers = count;
      best.inlier_mask = mask;
      const double w = static_cast<double>(count) / n;
      const double denom = std::log(1.0 - std::pow(w, kMinimalSampleSize));
      if (w >= 1.0) {
        required = 0;
      } else if (denom < 0.0) {
        const double k = std::log(1.0 - config.confidence) / denom;
        required = static_cast<int>(std::min(k + 1.0, 1e9));
      }
    }
  }
  if (best.num_inliers < kMinimalSampleSize) {
    Fail(SfmErrc::kDegenerateConfiguration,
         "only " + std::to_string(best.num_inliers) + " inliers after RANSAC");
  }

  // Local refinement: refit on the inlier set while support does not drop.
  for (int round = 0; round < 3; ++round) {
    std::vector<CalibratedPair> inliers;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (best.inlier_mask[i]) inliers.push_back(pairs[i]);
    }
    const Eigen::Matrix3d E = EightPointEssential(inliers);
    const std::size_t count = CountInliers(E, pairs, config.threshold, &mask);
    if (count < best.num_inliers) break;
    const bool unchanged = mask == best.inlier_mask;
    best.E = E;
    best.num_inliers = count;
    best.inlier_mask = mask;
    if (unchanged) break;
  }
  return best;
}

RelativePose DecomposeEssential(const Eigen::Matrix3d& E,
                                const std::vector<CalibratedPair>& pairs) {
  if (pairs.empty()) {
    Fail(SfmErrc::kTooFewCorrespondences,
         "cheirality disambiguation needs at least one correspondence");
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(E,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU();
  Eigen::Matrix3d V = svd.matrixV();
  if (U.determinant() < 0.0) U = -U;
  if (V.determinant() < 0.0) V = -V;
  Eigen::Matrix3d W;
  W << 0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  const Eigen::Matrix3d R1 = U * W * V.transpose();
  const Eigen::Matrix3d R2 = U * W.transpose() * V.transpose();
  const Eigen::Vector3d t = U.col(2).normalized();

  const std::array<Eigen::Matrix3d, 4> rotations{R1, R1, R2, R2};
  const std::array<Eigen::Vector3d, 4> translations{t, -t, t, -t};

  RelativePose result;
  for (int c = 0; c < 4; ++c) {
    std::size_t support = 0;
    for (const auto& pair : pairs) {
      Eigen::Vector3d X;
      if (!TriangulateNormalized(pair.x1, pair.x2, rotations[c],
                                 translations[c], &X)) {
        continue;
      }
      const double depth2 = (rotations[c] * X + translations[c]).z();
      if (X.z() > 0.0 && depth2 > 0.0) ++support;
    }
    result.candidate_support[c] = support;
  }
  const auto best_it = std::max_element(result.candidate_support.begin(),
                                        result.candidate_support.end());
  const std::size_t best = static_cast<std::size_t>(
      std::distance(result.candidate_support.begin(), best_it));
  const std::size_t best_support = *best_it;
  const bool tie = std::count(result.candidate_support.begin(),
                              result.candidate_support.end(), best_support) > 1;
  if (tie || 2 * best_support <= pairs.size()) {
    Fail(SfmErrc::kCheiralityAmbiguous,
         "best candidate places " + std::to_string(best_support) + " of " +
             std::to_string(pairs.size()) + " points in front of both cameras");
  }
  result.selected = best;
  result.R = rotations[best];
  result.t = translations[best];
  return result;
}

Eigen::Vector3d Triangulate(const Eigen::Vector2d& pixel_a,
                            const Eigen::Vector2d& pixel_b,
                            const CameraPose& pose_a, const CameraPose& pose_b,
                            const CameraIntrinsics& intrinsics_a,
                            const CameraIntrinsics& intrinsics_b) {
  const double baseline = (pose_a.center - pose_b.center).norm();
  const double scale =
      std::max({1.0, pose_a.center.norm(), pose_b.center.norm()});
  if (!(baseline > 1e-12 * scale)) {
    Fail(SfmErrc::kInsufficientBaseline, "camera centers coincide");
  }
  // Work in a frame centered between the cameras with unit baseline so the
  // homogeneous system is well conditioned regardless of world placement.
  const Eigen::Vector3d mid = 0.5 * (pose_a.center + pose_b.center);
  const Eigen::Vector2d xa = intrinsics_a.ToNormalized(pixel_a);
  const Eigen::Vector2d xb = intrinsics_b.ToNormalized(pixel_b);

  auto camera_matrix = [&](const CameraPose& pose) {
    Eigen::Matrix<double, 3, 4> P;
    const Eigen::Matrix3d R = pose.R();
    P.leftCols<3>() = R;
    P.col(3) = -R * (pose.center - mid) / baseline;
    return P;
  };
  const auto Pa = camera_matrix(pose_a);
  const auto Pb = camera_matrix(pose_b);
  Eigen::Matrix4d A;
  A.row(0) = xa.x() * Pa.row(2) - Pa.row(0);
  A.row(1) = xa.y() * Pa.row(2) - Pa.row(1);
  A.row(2) = xb.x() * Pb.row(2) - Pb.row(0);
  A.row(3) = xb.y() * Pb.row(2) - Pb.row(1);
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(A, Eigen::ComputeFullV);
  const Eigen::Vector4d X = svd.matrixV().col(3);
  if (std::abs(X(3)) < 1e-12) {
    Fail(SfmErrc::kPointAtInfinity, "viewing rays are parallel");
  }
  const Eigen::Vector3d point = mid + baseline * X.head<3>() / X(3);
  if (!(pose_a.ToCamera(point).z() > 0.0) ||
      !(pose_b.ToCamera(point).z() > 0.0)) {
    Fail(SfmErrc::kNegativeDepth, "triangulated point is behind a camera");
  }
  return point;
}

double TriangulationAngle(const Eigen::Vector3d& center_a,
                          const Eigen::Vector3d& center_b,
                          const Eigen::Vector3d& point) {
  const Eigen::Vector3d ra = (center_a - point).normalized();
  const Eigen::Vector3d rb = (center_b - point).normalized();
  return std::atan2(ra.cross(rb).norm(), ra.dot(rb));
}

Eigen::Quaterniond ApplyRotationIncrement(const Eigen::Quaterniond& q,
                                          const Eigen::Vector3d& w) {
  const double angle = w.norm();
  Eigen::Quaterniond dq = Eigen::Quaterniond::Identity();
  if (angle > 0.0) {
    dq = Eigen::Quaterniond(Eigen::AngleAxisd(angle, w / angle));
  }
  return (dq * q).normalized();
}

ProjectionJacobians ComputeProjectionJacobians(const CameraIntrinsics& k,
                                               const CameraPose& pose,
                                               const Eigen::Vector3d& point) {
  ProjectionJacobians j;
  const Eigen::Matrix3d R = pose.R();
  const Eigen::Vector3d pc = R * (point - pose.center);
  const double iz = 1.0 / pc.z();
  j.depth = pc.z();
  j.pixel = k.ToPixel(pc.hnormalized());
  Eigen::Matrix<double, 2, 3> d_proj;
  d_proj << k.fx * iz, 0.0, -k.fx * pc.x() * iz * iz, 0.0, k.fy * iz,
      -k.fy * pc.y() * iz * iz;
  j.d_rotation = -d_proj * Skew(pc);
  j.d_center = -d_proj * R;
  j.d_point = d_proj * R;
  return j;
}

CameraPose SolvePnp(const std::vector<Eigen::Vector3d>& points,
                    const std::vector<Eigen::Vector2d>& pixels,
                    const CameraIntrinsics& intrinsics,
                    const PnpOptions& options) {
  if (points.size() != pixels.size()) {
    Fail(SfmErrc::kInvalidArgument, "point and pixel counts differ");
  }
  const std::size_t n = points.size();
  if (n < 6) {
    Fail(SfmErrc::kTooFewPoints,
         "PnP needs at least 6 points, got " + std::to_string(n));
  }

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(n);
  Eigen::MatrixXd centered(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    centered.row(static_cast<Eigen::Index>(i)) = (points[i] - mean).transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> spread(centered);
  const Eigen::Vector3d sv = spread.singularValues();
  if (!(sv(0) > 0.0) || sv(2) < 1e-6 * sv(0)) {
    Fail(SfmErrc::kDegenerateGeometry, "3D points are coplanar or collinear");
  }
  const double point_scale = std::sqrt(3.0) * std::sqrt(static_cast<double>(n)) /
                             centered.norm();

  std::vector<Eigen::Vector2d> normalized(n);
  for (std::size_t i = 0; i < n; ++i) {
    normalized[i] = intrinsics.ToNormalized(pixels[i]);
  }
  const Eigen::Matrix3d T2 = NormalizationTransform(normalized);
  Eigen::Matrix4d T3 = Eigen::Matrix4d::Identity();
  T3.topLeftCorner<3, 3>() *= point_scale;
  T3.topRightCorner<3, 1>() = -point_scale * mean;

  Eigen::MatrixXd A(2 * n, 12);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector4d X = T3 * points[i].homogeneous();
    const Eigen::Vector3d x = T2 * normalized[i].homogeneous();
    const auto r = static_cast<Eigen::Index>(2 * i);
    A.row(r) << X.transpose(), Eigen::RowVector4d::Zero(), -x.x() * X.transpose();
    A.row(r + 1) << Eigen::RowVector4d::Zero(), X.transpose(),
        -x.y() * X.transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd p = svd.matrixV().col(11);
  Eigen::Matrix<double, 3, 4> P;
  P << p(0), p(1), p(2), p(3), p(4), p(5), p(6), p(7), p(8), p(9), p(10), p(11);
  P = T2.inverse() * P * T3;

  Eigen::Matrix3d M = P.leftCols<3>();
  if (M.determinant() < 0.0) {
    P = -P;
    M = -M;
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> msvd(M,
                                         Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d R = msvd.matrixU() * msvd.matrixV().transpose();
  const double lambda = msvd.singularValues().mean();
  const Eigen::Vector3d t = P.col(3) / lambda;
  CameraPose pose = CameraPose::FromRt(R, t);
  if (!options.refine) return pose;

  // Levenberg-Marquardt on (rotation increment, center increment).
  auto cost_of = [&](const CameraPose& candidate) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      c += (Project(intrinsics, candidate, points[i]) - pixels[i]).squaredNorm();
    }
    return c;
  };
  double cost = cost_of(pose);
  double lambda_lm = 1e-3;
  for (int iter = 0; iter < options.max_iterations && cost > 0.0; ++iter) {
    Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = ComputeProjectionJacobians(intrinsics, pose, points[i]);
      Eigen::Matrix<double, 2, 6> J;
      J << j.d_rotation, j.d_center;
      const Eigen::Vector2d r = j.pixel - pixels[i];
      H += J.transpose() * J;
      g -= J.transpose() * r;
    }
    if (g.lpNorm<Eigen::Infinity>() < 1e-12) break;
    bool accepted = false;
    while (lambda_lm < 1e16) {
      Eigen::Matrix<double, 6, 6> Hd = H;
      for (int d = 0; d < 6; ++d) Hd(d, d) += lambda_lm * std::max(H(d, d), 1e-12);
      const Eigen::Matrix<double, 6, 1> delta = Hd.ldlt().solve(g);
      CameraPose trial;
      trial.rotation = ApplyRotationIncrement(pose.rotation, delta.head<3>());
      trial.center = pose.center + delta.tail<3>();
      const double trial_cost = cost_of(trial);
      if (trial_cost < cost) {
        const double decrease = (cost - trial_cost) / cost;
        pose = trial;
        cost = trial_cost;
        lambda_lm *= 0.1;
        accepted = decrease > 1e-14;
        break;
      }
      lambda_lm *= 10.0;
    }
    if (!accepted) break;
  }
  return pose;
}

Similarity AlignSimilarity(const std::vector<Eigen::Vector3d>& source,
                           const std::vector<Eigen::Vector3d>& target) {
  if (source.size() != target.size()) {
    Fail(SfmErrc::kInvalidArgument, "point sets differ in size");
  }
  const std::size_t n = source.size();
  if (n < 3) {
    Fail(SfmErrc::kDegenerateGeometry,
         "similarity alignment needs 3 non-collinear points");
  }
  Eigen::Vector3d mu_s = Eigen::Vector3d::Zero();
  Eigen::Vector3d mu_t = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_s += source[i];
    mu_t += target[i];
  }
  mu_s /= static_cast<double>(n);
  mu_t /= static_cast<double>(n);

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d spread = Eigen::Matrix3d::Zero();
  double var_s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d ds = source[i] - mu_s;
    cov += (target[i] - mu_t) * ds.transpose();
    spread += ds * ds.transpose();
    var_s += ds.squaredNorm();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> spread_svd(spread);
  const Eigen::Vector3d sv = spread_svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) < 1e-12 * sv(0)) {
    Fail(SfmErrc::kDegenerateGeometry, "source points are collinear");
  }
  cov /= static_cast<double>(n);
  var_s /= static_cast<double>(n);

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d S = Eigen::Matrix3d::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) {
    S(2, 2) = -1.0;
  }
  Similarity sim;
  sim.rotation = svd.matrixU() * S * svd.matrixV().transpose();
  sim.scale = (svd.singularValues().asDiagonal() * S).trace() / var_s;
  sim.translation = mu_t - sim.scale * sim.rotation * mu_s;
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sq += (sim(source[i]) - target[i]).squaredNorm();
  }
  sim.rmse = std::sqrt(sq / static_cast<double>(n));
  return sim;
}

Reconstruction TransformReconstruction(const Reconstruction& recon,
                                       const Similarity& sim) {
  Reconstruction out = recon;
  const Eigen::Quaterniond qs(sim.rotation);
  for (auto& [id, pose] : out.poses) {
    pose.rotation = (pose.rotation * qs.conjugate()).normalized();
    pose.center = sim(pose.center);
  }
  for (auto& [id, point] : out.points) point = sim(point);
  return out;
}

}  // namespace geoshare::sfm
