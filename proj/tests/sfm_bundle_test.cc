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

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "geoshare/common/ply.h"
#include "geoshare/sfm/bundle_adjustment.h"
#include "geoshare/sfm/dem.h"
#include "geoshare/sfm/geometry.h"
#include "geoshare/sfm/incremental.h"
#include "geoshare/sfm/io.h"
#include "geoshare/sfm/synthetic.h"
#include "support/sfm_oracles.h"

namespace geoshare::sfm {
namespace {

using geoshare::testing::AlignedPointRmse;
using geoshare::testing::Diameter;
using geoshare::testing::MaxJacobianRelativeError;
using geoshare::testing::PerturbedTruth;

SceneConfig Ring(double noise = 0.0) {
  SceneConfig config;
  config.noise_px = noise;
  return config;
}

TEST(BundleAdjust, NoiselessOptimumIsFixedPoint) {
  const auto scene = SynthesizeScene(Ring());
  const auto result = BundleAdjust(scene.truth);
  EXPECT_TRUE(result.summary.converged);
  EXPECT_LE(result.summary.accepted_steps, 1);
  EXPECT_LT(MeanReprojectionError(result.reconstruction), 1e-9);
}

TEST(BundleAdjust, RecoversPerturbedOptimum) {
  const auto scene = SynthesizeScene(Ring());
  const auto start = PerturbedTruth(scene, 1e-3, 1e-3, 1e-3, 7);
  ASSERT_GT(MeanReprojectionError(start), 0.1);
  const auto result = BundleAdjust(start);
  EXPECT_TRUE(result.summary.converged) << result.summary.termination;
  EXPECT_LT(MeanReprojectionError(result.reconstruction), 1e-6);
}

TEST(BundleAdjust, GaugeCamerasStayPinned) {
  const auto scene = SynthesizeScene(Ring(0.5));
  const auto start = PerturbedTruth(scene, 1e-2, 1e-2, 1e-2, 3);
  const auto result = BundleAdjust(start);
  const auto& before = start.poses;
  const auto& after = result.reconstruction.poses;
  EXPECT_EQ(after.at(0).center, before.at(0).center);
  EXPECT_EQ(after.at(0).rotation.coeffs(), before.at(0).rotation.coeffs());
  const double baseline_before = (before.at(1).center - before.at(0).center).norm();
  const double baseline_after = (after.at(1).center - after.at(0).center).norm();
  EXPECT_NEAR(baseline_after, baseline_before, 1e-12 * baseline_before);
}

TEST(BundleAdjust, AcceptedCostsNeverIncrease) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SceneConfig config = Ring(1.0);
    config.seed = seed;
    const auto scene = SynthesizeScene(config);
    const auto result = BundleAdjust(PerturbedTruth(scene, 2e-2, 5e-2, 5e-2, seed));
    const auto& history = result.summary.cost_history;
    ASSERT_GE(history.size(), 2u);
    for (std::size_t i = 1; i < history.size(); ++i) {
      EXPECT_LE(history[i], history[i - 1]) << "seed " << seed << " step " << i;
    }
    EXPECT_EQ(history.back(), result.summary.final_cost);
    EXPECT_NEAR(result.summary.final_cost,
                TotalSquaredError(result.reconstruction),
                1e-9 * (1.0 + result.summary.final_cost));
  }
}

TEST(BundleAdjust, IterationLimitReportsNotConverged) {
  const auto scene = SynthesizeScene(Ring(0.5));
  BundleConfig config;
  config.max_iterations = 1;
  const auto start = PerturbedTruth(scene, 1e-2, 1e-2, 1e-2, 5);
  const auto result = BundleAdjust(start, config);
  EXPECT_FALSE(result.summary.converged);
  EXPECT_LE(result.summary.final_cost, result.summary.initial_cost);
}

TEST(BundleProblem, JacobianMatchesCentralDifferences) {
  SceneConfig config = Ring(0.5);
  config.n_points = 20;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    config.seed = 100 + seed;
    const auto scene = SynthesizeScene(config);
    const auto state = PerturbedTruth(scene, 5e-2, 0.2, 0.2, seed);
    const BundleProblem problem(state, BundleGauge::Default(state));
    EXPECT_LT(MaxJacobianRelativeError(problem), 1e-4) << "seed " << seed;
  }
}

TEST(BundleProblem, ParameterLayoutRemovesGauge) {
  const auto scene = SynthesizeScene(Ring());
  const BundleProblem problem(scene.truth, BundleGauge::Default(scene.truth));
  EXPECT_EQ(problem.NumCameraParameters(), 5 + 6 * 3);
  EXPECT_EQ(problem.NumParameters(), 5 + 6 * 3 + 3 * 100);
  EXPECT_EQ(problem.NumResiduals(), 2 * 5 * 100);
}

TEST(IncrementalSfm, NoiselessRingRecoversGeometry) {
  const auto scene = SynthesizeScene(Ring());
  const auto result = IncrementalSfm(scene.tracks, scene.truth.intrinsics);
  EXPECT_EQ(result.reconstruction.poses.size(), 5u);
  EXPECT_TRUE(result.unregistered.empty());
  EXPECT_EQ(result.reconstruction.points.size(), 100u);
  const double diameter = Diameter(scene.truth.points);
  EXPECT_LT(AlignedPointRmse(result.reconstruction, scene.truth), 1e-6 * diameter);
  EXPECT_LT(MeanReprojectionError(result.reconstruction), 1e-9);
  const auto& first = result.reconstruction.poses.at(result.seed.first);
  const auto& second = result.reconstruction.poses.at(result.seed.second);
  EXPECT_EQ(first.center, Eigen::Vector3d::Zero());
  EXPECT_NEAR((second.center - first.center).norm(), 1.0, 1e-9);
}

TEST(IncrementalSfm, NoisyRingStaysWithinNoiseBudget) {
  const auto scene = SynthesizeScene(Ring(0.5));
  const auto result = IncrementalSfm(scene.tracks, scene.truth.intrinsics);
  EXPECT_EQ(result.reconstruction.poses.size(), 5u);
  EXPECT_LE(RmsReprojectionError(result.reconstruction), 0.75);
}

TEST(IncrementalSfm, RegistersEveryImageForAnySeed) {
  const auto scene = SynthesizeScene(Ring(0.5));
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    IncrementalConfig config;
    config.seed = seed;
    const auto result = IncrementalSfm(scene.tracks, scene.truth.intrinsics, config);
    EXPECT_EQ(result.reconstruction.poses.size(), 5u) << "seed " << seed;
    EXPECT_LE(RmsReprojectionError(result.reconstruction), 0.75) << "seed " << seed;
  }
}

TEST(IncrementalSfm, ToleratesOutliers) {
  SceneConfig config = Ring(0.3);
  config.outlier_rate = 0.05;
  const auto scene = SynthesizeScene(config);
  const auto result = IncrementalSfm(scene.tracks, scene.truth.intrinsics);
  EXPECT_EQ(result.reconstruction.poses.size(), 5u);
  EXPECT_LE(RmsReprojectionError(result.reconstruction), 0.75);
  for (const auto& [track, observations] : result.reconstruction.observations) {
    EXPECT_GE(observations.size(), 2u);
  }
}

TEST(IncrementalSfm, SharedCenterHasNoSeedPair) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CameraIntrinsics k{1000, 1000, 500, 500, 1000, 1000};
  std::map<ImageId, CameraIntrinsics> intrinsics;
  std::vector<CameraPose> poses;
  for (ImageId i = 0; i < 4; ++i) {
    intrinsics[i] = k;
    poses.push_back(LookAt(Eigen::Vector3d::Zero(),
                           Eigen::Vector3d(0.2 * i, 0.1 * i, 10.0)));
  }
  std::vector<FeatureTrack> tracks;
  for (TrackId t = 0; t < 60; ++t) {
    const Eigen::Vector3d X(3 * u(rng), 3 * u(rng), 10 + 2 * u(rng));
    FeatureTrack track{t, {}};
    for (ImageId i = 0; i < 4; ++i) {
      track.observations.push_back({i, Project(k, poses[i], X)});
    }
    tracks.push_back(track);
  }
  try {
    IncrementalSfm(tracks, intrinsics);
    FAIL() << "expected NoValidSeedPair";
  } catch (const SfmError& e) {
    EXPECT_EQ(e.code(), SfmErrc::kNoValidSeedPair);
  }
}

TEST(IncrementalSfm, BitIdenticalAcrossRuns) {
  SceneConfig config = Ring(0.5);
  config.outlier_rate = 0.02;
  const auto scene = SynthesizeScene(config);
  const auto a = IncrementalSfm(scene.tracks, scene.truth.intrinsics);
  const auto b = IncrementalSfm(scene.tracks, scene.truth.intrinsics);
  ASSERT_EQ(a.reconstruction.poses.size(), b.reconstruction.poses.size());
  for (const auto& [id, pose] : a.reconstruction.poses) {
    EXPECT_EQ(pose.center, b.reconstruction.poses.at(id).center);
    EXPECT_EQ(pose.rotation.coeffs(), b.reconstruction.poses.at(id).rotation.coeffs());
  }
  ASSERT_EQ(a.reconstruction.points.size(), b.reconstruction.points.size());
  for (const auto& [id, X] : a.reconstruction.points) {
    EXPECT_EQ(X, b.reconstruction.points.at(id));
  }
  EXPECT_EQ(a.registration_order, b.registration_order);
}

TEST(IncrementalSfm, RejectsSingleImage) {
  const auto scene = SynthesizeScene(Ring());
  std::map<ImageId, CameraIntrinsics> one{{0, scene.truth.intrinsics.at(0)}};
  EXPECT_THROW(IncrementalSfm(scene.tracks, one), SfmError);
}

TEST(SynthesizeScene, DeterministicForSeed) {
  SceneConfig config = Ring(0.5);
  config.outlier_rate = 0.1;
  const auto a = SynthesizeScene(config);
  const auto b = SynthesizeScene(config);
  ASSERT_EQ(a.tracks.size(), b.tracks.size());
  for (std::size_t t = 0; t < a.tracks.size(); ++t) {
    for (std::size_t o = 0; o < a.tracks[t].observations.size(); ++o) {
      EXPECT_EQ(a.tracks[t].observations[o].pixel, b.tracks[t].observations[o].pixel);
    }
  }
  EXPECT_EQ(a.outliers, b.outliers);
  EXPECT_EQ(a.truth.points, b.truth.points);
}

TEST(SynthesizeScene, NoiselessObservationsAreExactProjections) {
  const auto scene = SynthesizeScene(Ring());
  for (const auto& track : scene.tracks) {
    const Eigen::Vector3d& X = scene.truth.points.at(track.track_id);
    for (const auto& obs : track.observations) {
      double depth = 0.0;
      const Eigen::Vector2d p = Project(scene.truth.intrinsics.at(obs.image_id),
                                        scene.truth.poses.at(obs.image_id), X, &depth);
      EXPECT_EQ(p, obs.pixel);
      EXPECT_GT(depth, 0.0);
    }
  }
}

TEST(SynthesizeScene, OutlierCountFollowsRate) {
  SceneConfig config;
  config.n_cameras = 5;
  config.n_points = 200;
  config.outlier_rate = 0.2;
  const auto scene = SynthesizeScene(config);
  // 1000 Bernoulli(0.2) draws: sd = sqrt(1000 * 0.2 * 0.8) ~ 12.6; allow 4 sd.
  const double sd = std::sqrt(1000 * 0.2 * 0.8);
  EXPECT_NEAR(static_cast<double>(scene.outliers.size()), 200.0, 4.0 * sd);
}

TEST(SynthesizeScene, RejectsTinyConfigs) {
  SceneConfig config;
  config.n_points = 7;
  EXPECT_THROW(SynthesizeScene(config), SfmError);
}

TEST(BuildDem, ConstantFieldStaysConstant) {
  const std::vector<Eigen::Vector3d> corners{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  const DemSpec spec{0.0, 0.0, 0.25, 4, 4};
  for (const auto method : {DemMethod::kNearest, DemMethod::kIdw}) {
    const auto grid = BuildDem(corners, spec, method);
    ASSERT_EQ(grid.heights.size(), 16u);
    int filled = 0;
    for (const double h : grid.heights) {
      if (std::isnan(h)) continue;
      EXPECT_EQ(h, 0.0);
      ++filled;
    }
    EXPECT_GT(filled, 0);
  }
}

TEST(BuildDem, PlaneWithinTwoPercentOfRange) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<Eigen::Vector3d> points;
  for (int i = 0; i < 20000; ++i) {
    const double x = u(rng), y = u(rng);
    points.emplace_back(x, y, x);
  }
  const auto spec = FitDemSpec(points, 0.25);
  for (const auto method : {DemMethod::kNearest, DemMethod::kIdw}) {
    const auto grid = BuildDem(points, spec, method);
    for (int r = 0; r < grid.nrows; ++r) {
      for (int c = 0; c < grid.ncols; ++c) {
        const double h = grid.At(r, c);
        ASSERT_FALSE(std::isnan(h));
        EXPECT_NEAR(h, grid.CellCenter(r, c).x(), 0.02 * 10.0);
      }
    }
  }
}

TEST(BuildDem, FarCellsAreNoData) {
  const std::vector<Eigen::Vector3d> point{{0.5, 0.5, 2.0}};
  const auto grid = BuildDem(point, DemSpec{0.0, 0.0, 1.0, 10, 1}, DemMethod::kIdw);
  EXPECT_EQ(grid.At(0, 0), 2.0);
  EXPECT_EQ(grid.At(0, 3), 2.0);
  EXPECT_TRUE(std::isnan(grid.At(0, 4)));
}

TEST(BuildDem, EmptyCloud) {
  try {
    BuildDem({}, DemSpec{}, DemMethod::kIdw);
    FAIL();
  } catch (const SfmError& e) {
    EXPECT_EQ(e.code(), SfmErrc::kEmptyCloud);
  }
}

TEST(SfmIo, TracksRoundTripExactly) {
  const auto scene = SynthesizeScene(Ring(0.5));
  std::stringstream buffer;
  WriteTracksCsv(buffer, scene.tracks);
  const auto read = ReadTracksCsv(buffer);
  ASSERT_EQ(read.size(), scene.tracks.size());
  for (std::size_t t = 0; t < read.size(); ++t) {
    EXPECT_EQ(read[t].track_id, scene.tracks[t].track_id);
    ASSERT_EQ(read[t].observations.size(), scene.tracks[t].observations.size());
    for (std::size_t o = 0; o < read[t].observations.size(); ++o) {
      EXPECT_EQ(read[t].observations[o].pixel, scene.tracks[t].observations[o].pixel);
    }
  }
}

TEST(SfmIo, IntrinsicsRoundTrip) {
  const auto scene = SynthesizeScene(Ring());
  std::stringstream buffer;
  WriteIntrinsicsCsv(buffer, scene.truth.intrinsics);
  const auto read = ReadIntrinsicsCsv(buffer);
  ASSERT_EQ(read.size(), 5u);
  EXPECT_EQ(read.at(3).fx, 1000.0);
  EXPECT_EQ(read.at(3).cy, 500.0);
}

TEST(SfmIo, RejectsWrongHeaderAndDuplicates) {
  std::istringstream bad_header("track,image,u,v\n");
  EXPECT_THROW(ReadTracksCsv(bad_header), SfmError);
  std::istringstream dup("track_id,image_id,u,v\n1,0,1,2\n1,0,3,4\n");
  EXPECT_THROW(ReadTracksCsv(dup), SfmError);
  std::istringstream crlf("track_id,image_id,u,v\r\n1,0,1.5,2\r\n1,1,3,4\r\n");
  const auto tracks = ReadTracksCsv(crlf);
  ASSERT_EQ(tracks.size(), 1u);
  EXPECT_EQ(tracks[0].observations[0].pixel.x(), 1.5);
}

TEST(SfmIo, EsriGridRoundTrip) {
  DemGrid grid{10.0, 20.0, 0.5, 3, 2, {1.0, 2.5, std::nan(""), -4.0, 0.125, 7.0}};
  std::stringstream buffer;
  WriteEsriAsciiGrid(buffer, grid);
  EXPECT_NE(buffer.str().find("NODATA_value -9999"), std::string::npos);
  const auto read = ReadEsriAsciiGrid(buffer);
  EXPECT_EQ(read.ncols, 3);
  EXPECT_EQ(read.nrows, 2);
  EXPECT_EQ(read.x0, 10.0);
  EXPECT_EQ(read.cell_size, 0.5);
  EXPECT_TRUE(std::isnan(read.At(0, 2)));
  EXPECT_EQ(read.At(1, 1), 0.125);
}

TEST(Ply, RoundTripWithColors) {
  PointCloud cloud;
  cloud.positions = {{0.5, -1.25, 3.0}, {1e-3, 2.0, -7.5}};
  cloud.colors = {{{255, 0, 17}}, {{1, 2, 3}}};
  std::stringstream buffer;
  WritePly(buffer, cloud);
  const auto read = ReadPly(buffer);
  ASSERT_EQ(read.positions.size(), 2u);
  EXPECT_EQ(read.positions[1].cast<float>(), cloud.positions[1].cast<float>());
  EXPECT_EQ(read.colors, cloud.colors);
}

}  // namespace
}  // namespace geoshare::sfm
