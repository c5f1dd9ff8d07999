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

#include "geoshare/sfm/incremental.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <set>

namespace geoshare::sfm {
namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

struct TrackTable {
  std::map<TrackId, const FeatureTrack*> by_id;
  std::map<ImageId, std::vector<TrackId>> by_image;
};

TrackTable IndexTracks(const std::vector<FeatureTrack>& tracks,
                       const std::map<ImageId, CameraIntrinsics>& intrinsics) {
  TrackTable table;
  for (const auto& track : tracks) {
    if (!table.by_id.emplace(track.track_id, &track).second) {
      Fail(SfmErrc::kInvalidArgument,
           "duplicate track id " + std::to_string(track.track_id));
    }
    std::set<ImageId> seen;
    for (const auto& obs : track.observations) {
      if (!seen.insert(obs.image_id).second) {
        Fail(SfmErrc::kInvalidArgument,
             "track " + std::to_string(track.track_id) +
                 " observes image " + std::to_string(obs.image_id) + " twice");
      }
      if (!intrinsics.contains(obs.image_id)) {
        Fail(SfmErrc::kInvalidArgument,
             "no intrinsics for image " + std::to_string(obs.image_id));
      }
      table.by_image[obs.image_id].push_back(track.track_id);
    }
  }
  return table;
}

double Median(std::vector<double> values) {
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

struct SeedCandidate {
  SeedPair pair;
  RelativePose relative;
  std::vector<TrackId> inlier_tracks;
};

std::optional<SeedCandidate> EvaluatePair(
    ImageId a, ImageId b, const TrackTable& table,
    const std::map<ImageId, CameraIntrinsics>& intrinsics,
    const IncrementalConfig& config) {
  std::vector<TrackId> shared;
  const auto& in_b = table.by_image.at(b);
  const std::set<TrackId> b_set(in_b.begin(), in_b.end());
  for (TrackId t : table.by_image.at(a)) {
    if (b_set.contains(t)) shared.push_back(t);
  }
  if (shared.size() < 8) return std::nullopt;

  const auto& ka = intrinsics.at(a);
  const auto& kb = intrinsics.at(b);
  std::vector<CalibratedPair> pairs;
  pairs.reserve(shared.size());
  for (TrackId t : shared) {
    const FeatureTrack& track = *table.by_id.at(t);
    pairs.push_back({ka.ToNormalized(track.Find(a)->pixel),
                     kb.ToNormalized(track.Find(b)->pixel)});
  }

  SeedCandidate candidate;
  try {
    RansacConfig ransac = config.ransac;
    ransac.seed = config.seed ^ (static_cast<std::uint64_t>(a) << 32 | b);
    const EssentialEstimate estimate = EstimateEssential(pairs, ransac);
    std::vector<CalibratedPair> inliers;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (estimate.inlier_mask[i]) {
        inliers.push_back(pairs[i]);
        candidate.inlier_tracks.push_back(shared[i]);
      }
    }
    candidate.relative = DecomposeEssential(estimate.E, inliers);
    candidate.pair.inliers = estimate.num_inliers;
  } catch (const SfmError&) {
    return std::nullopt;
  }

  const CameraPose pose_a;
  const CameraPose pose_b =
      CameraPose::FromRt(candidate.relative.R, candidate.relative.t);
  std::vector<double> angles;
  for (TrackId t : candidate.inlier_tracks) {
    const FeatureTrack& track = *table.by_id.at(t);
    try {
      const Eigen::Vector3d X = Triangulate(track.Find(a)->pixel,
                                            track.Find(b)->pixel, pose_a,
                                            pose_b, ka, kb);
      angles.push_back(TriangulationAngle(pose_a.center, pose_b.center, X));
    } catch (const SfmError&) {
    }
  }
  if (angles.size() < 8) return std::nullopt;
  const double median_deg = Median(angles) * kRadToDeg;
  if (median_deg < config.min_seed_angle_deg) return std::nullopt;
  candidate.pair.first = a;
  candidate.pair.second = b;
  candidate.pair.median_angle_deg = median_deg;
  candidate.pair.score =
      static_cast<double>(candidate.pair.inliers) * median_deg;
  return candidate;
}

double ReprojectionError(const Reconstruction& recon, ImageId image,
                         const Eigen::Vector3d& point, const Eigen::Vector2d& pixel,
                         double* depth) {
  return (Project(recon.intrinsics.at(image), recon.poses.at(image), point,
                  depth) -
          pixel)
      .norm();
}

// Triangulates `track` from its registered observations using the widest
// pair of rays, then keeps every consistent observation.
bool TriangulateTrack(const FeatureTrack& track, Reconstruction* recon,
                      const IncrementalConfig& config) {
  std::vector<const Observation*> registered;
  for (const auto& obs : track.observations) {
    if (recon->poses.contains(obs.image_id)) registered.push_back(&obs);
  }
  if (registered.size() < 2) return false;

  double best_angle = -1.0;
  Eigen::Vector3d best_point = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < registered.size(); ++i) {
    for (std::size_t j = i + 1; j < registered.size(); ++j) {
      const auto& pa = recon->poses.at(registered[i]->image_id);
      const auto& pb = recon->poses.at(registered[j]->image_id);
      try {
        const Eigen::Vector3d X = Triangulate(
            registered[i]->pixel, registered[j]->pixel, pa, pb,
            recon->intrinsics.at(registered[i]->image_id),
            recon->intrinsics.at(registered[j]->image_id));
        const double angle = TriangulationAngle(pa.center, pb.center, X);
        if (angle > best_angle) {
          best_angle = angle;
          best_point = X;
        }
      } catch (const SfmError&) {
      }
    }
  }
  if (best_angle * kRadToDeg < config.min_triangulation_angle_deg) return false;

  std::vector<Observation> kept;
  for (const Observation* obs : registered) {
    double depth = 0.0;
    const double err =
        ReprojectionError(*recon, obs->image_id, best_point, obs->pixel, &depth);
    if (depth > 0.0 && err < config.max_reprojection_px) kept.push_back(*obs);
  }
  if (kept.size() < 2) return false;
  recon->points[track.track_id] = best_point;
  recon->observations[track.track_id] = std::move(kept);
  return true;
}

void FilterObservations(Reconstruction* recon, const IncrementalConfig& config) {
  for (auto it = recon->observations.begin(); it != recon->observations.end();) {
    const Eigen::Vector3d& X = recon->points.at(it->first);
    auto& list = it->second;
    std::erase_if(list, [&](const Observation& obs) {
      double depth = 0.0;
      const double err = ReprojectionError(*recon, obs.image_id, X, obs.pixel, &depth);
      return !(depth > 0.0) || !(err < config.max_reprojection_px);
    });
    if (list.size() < 2) {
      recon->points.erase(it->first);
      it = recon->observations.erase(it);
    } else {
      ++it;
    }
  }
}

std::optional<CameraPose> RegisterImage(ImageId image, const TrackTable& table,
                                        const Reconstruction& recon,
                                        const CameraIntrinsics& k,
                                        const IncrementalConfig& config,
                                        std::string* reason) {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector2d> pixels;
  for (TrackId t : table.by_image.at(image)) {
    auto it = recon.points.find(t);
    if (it == recon.points.end()) continue;
    points.push_back(it->second);
    pixels.push_back(table.by_id.at(t)->Find(image)->pixel);
  }
  if (static_cast<int>(points.size()) < config.min_registration_points) {
    *reason = "pnp: only " + std::to_string(points.size()) +
              " triangulated correspondences";
    return std::nullopt;
  }
  const auto consistent = [&](const CameraPose& pose) {
    std::vector<std::size_t> inliers;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double depth = 0.0;
      const double err = (Project(k, pose, points[i], &depth) - pixels[i]).norm();
      if (depth > 0.0 && err < config.max_reprojection_px) inliers.push_back(i);
    }
    return inliers;
  };
  try {
    // Minimal-sample hypotheses from unrefined DLT, scored by inlier count.
    std::mt19937_64 rng(config.seed ^ (0x9e3779b97f4a7c15ULL * (image + 1)));
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const PnpOptions dlt_only{0, false};
    constexpr std::size_t kSample = 6;
    std::vector<std::size_t> best;
    int required = config.ransac.max_iterations;
    for (int iter = 0; iter < required; ++iter) {
      for (std::size_t i = 0; i < kSample; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
        std::swap(order[i], order[pick(rng)]);
      }
      std::vector<Eigen::Vector3d> sample_points;
      std::vector<Eigen::Vector2d> sample_pixels;
      for (std::size_t i = 0; i < kSample; ++i) {
        sample_points.push_back(points[order[i]]);
        sample_pixels.push_back(pixels[order[i]]);
      }
      CameraPose hypothesis;
      try {
        hypothesis = SolvePnp(sample_points, sample_pixels, k, dlt_only);
      } catch (const SfmError&) {
        continue;
      }
      auto inliers = consistent(hypothesis);
      if (inliers.size() > best.size()) {
        best = std::move(inliers);
        const double ratio = static_cast<double>(best.size()) / points.size();
        const double miss = 1.0 - std::pow(ratio, static_cast<double>(kSample));
        if (miss <= 0.0) break;
        if (miss < 1.0) {
          const double needed =
              std::log(1.0 - config.ransac.confidence) / std::log(miss);
          required = static_cast<int>(std::min<double>(
              config.ransac.max_iterations, std::ceil(needed)));
        }
      }
    }
    if (2 * best.size() < points.size() ||
        static_cast<int>(best.size()) < config.min_registration_points) {
      *reason = "pnp: only " + std::to_string(best.size()) + " of " +
                std::to_string(points.size()) + " correspondences consistent";
      return std::nullopt;
    }
    CameraPose pose;
    for (int round = 0; round < 2; ++round) {
      std::vector<Eigen::Vector3d> inlier_points;
      std::vector<Eigen::Vector2d> inlier_pixels;
      for (std::size_t i : best) {
        inlier_points.push_back(points[i]);
        inlier_pixels.push_back(pixels[i]);
      }
      pose = SolvePnp(inlier_points, inlier_pixels, k);
      auto refined = consistent(pose);
      if (refined.size() < best.size()) break;
      best = std::move(refined);
    }
    return pose;
  } catch (const SfmError& e) {
    *reason = e.what();
    return std::nullopt;
  }
}

}  // namespace

IncrementalResult IncrementalSfm(
    const std::vector<FeatureTrack>& tracks,
    const std::map<ImageId, CameraIntrinsics>& intrinsics,
    const IncrementalConfig& config) {
  if (intrinsics.size() < 2) {
    Fail(SfmErrc::kInvalidArgument, "need at least two images");
  }
  for (const auto& [id, k] : intrinsics) k.Validate();
  const TrackTable table = IndexTracks(tracks, intrinsics);

  std::vector<ImageId> images;
  for (const auto& [id, obs] : table.by_image) images.push_back(id);

  std::optional<SeedCandidate> seed;
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t j = i + 1; j < images.size(); ++j) {
      auto candidate = EvaluatePair(images[i], images[j], table, intrinsics, config);
      if (candidate && (!seed || candidate->pair.score > seed->pair.score)) {
        seed = std::move(candidate);
      }
    }
  }
  if (!seed) {
    Fail(SfmErrc::kNoValidSeedPair,
         "no image pair with >= 8 shared tracks, a valid essential matrix and "
         "median triangulation angle >= " +
             std::to_string(config.min_seed_angle_deg) + " deg");
  }

  IncrementalResult result;
  result.seed = seed->pair;
  Reconstruction& recon = result.reconstruction;
  recon.intrinsics = intrinsics;
  const ImageId a = seed->pair.first;
  const ImageId b = seed->pair.second;
  recon.poses[a] = CameraPose{};
  recon.poses[b] = CameraPose::FromRt(seed->relative.R, seed->relative.t);
  result.registration_order = {a, b};
  for (TrackId t : seed->inlier_tracks) {
    TriangulateTrack(*table.by_id.at(t), &recon, config);
  }
  if (recon.points.size() < 8) {
    Fail(SfmErrc::kReconstructionCollapsed,
         "seed pair triangulated only " + std::to_string(recon.points.size()) +
             " points");
  }

  BundleConfig bundle = config.bundle;
  bundle.gauge = BundleGauge{a, b};
  auto adjust = [&]() {
    BundleResult adjusted = BundleAdjust(recon, bundle);
    recon = std::move(adjusted.reconstruction);
    result.bundle_runs.push_back(adjusted.summary);
    FilterObservations(&recon, config);
  };
  adjust();

  std::map<ImageId, std::string> reasons;
  std::map<ImageId, std::size_t> attempted_with;
  while (true) {
    struct Candidate {
      ImageId image;
      std::size_t coverage;
    };
    std::vector<Candidate> candidates;
    for (ImageId image : images) {
      if (recon.poses.contains(image)) continue;
      std::size_t coverage = 0;
      for (TrackId t : table.by_image.at(image)) {
        if (recon.points.contains(t)) ++coverage;
      }
      if (static_cast<int>(coverage) < config.min_registration_points) {
        reasons[image] = "only " + std::to_string(coverage) +
                         " observations of triangulated tracks";
        continue;
      }
      auto prev = attempted_with.find(image);
      if (prev != attempted_with.end() && prev->second >= coverage) continue;
      candidates.push_back({image, coverage});
    }
    if (candidates.empty()) break;
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& l, const Candidate& r) {
                       return l.coverage > r.coverage;
                     });

    std::optional<ImageId> registered;
    for (const auto& c : candidates) {
      std::string reason;
      attempted_with[c.image] = c.coverage;
      auto pose = RegisterImage(c.image, table, recon, intrinsics.at(c.image),
                                config, &reason);
      if (pose) {
        recon.poses[c.image] = *pose;
        registered = c.image;
        reasons.erase(c.image);
        break;
      }
      reasons[c.image] = reason;
    }
    if (!registered) {
      if (recon.poses.size() == 2) {
        Fail(SfmErrc::kReconstructionCollapsed,
             "every candidate registration after the seed pair failed");
      }
      break;
    }
    result.registration_order.push_back(*registered);

    // Extend existing tracks into the new image, then triangulate new ones.
    for (TrackId t : table.by_image.at(*registered)) {
      const FeatureTrack& track = *table.by_id.at(t);
      auto it = recon.points.find(t);
      if (it != recon.points.end()) {
        const Observation* obs = track.Find(*registered);
        double depth = 0.0;
        const double err =
            ReprojectionError(recon, *registered, it->second, obs->pixel, &depth);
        if (depth > 0.0 && err < config.max_reprojection_px) {
          recon.observations[t].push_back(*obs);
        }
      } else {
        TriangulateTrack(track, &recon, config);
      }
    }
    adjust();
  }

  for (ImageId image : images) {
    if (recon.poses.contains(image)) continue;
    auto it = reasons.find(image);
    result.unregistered.push_back(
        {image, it != reasons.end() ? it->second : "not attempted"});
  }
  for (const auto& [image, k] : intrinsics) {
    if (!table.by_image.contains(image)) {
      result.unregistered.push_back({image, "no observations"});
    }
  }
  return result;
}

}  // namespace geoshare::sfm
