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

#include "geoshare/sfm/bundle_adjustment.h"
#include "geoshare/sfm/synthetic.h"

namespace geoshare::testing {

// Ground truth of a synthetic scene with every pose and point perturbed by
// Gaussian noise of the given magnitudes. The gauge cameras stay exact.
sfm::Reconstruction PerturbedTruth(const sfm::SyntheticScene& scene,
                                   double rotation_sigma, double center_sigma,
                                   double point_sigma, std::uint64_t seed);

// Max elementwise relative error between the analytic Jacobian of a bundle
// problem and central finite differences of its residuals. Entries where
// both magnitudes are below `floor` are compared absolutely against it.
double MaxJacobianRelativeError(const sfm::BundleProblem& problem,
                                double step = 1e-5, double floor = 1e-2);

// RMSE in ground-truth units after aligning the shared points of `estimate`
// onto `truth` with a similarity.
double AlignedPointRmse(const sfm::Reconstruction& estimate,
                        const sfm::Reconstruction& truth);

// Diameter of a point set: largest pairwise distance.
double Diameter(const std::map<sfm::TrackId, Eigen::Vector3d>& points);

}  // namespace geoshare::testing
