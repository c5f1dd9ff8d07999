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

#include "geoshare/mesh/ops.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>

#include <Eigen/Dense>

#include "geoshare/mesh/closest_point.h"

namespace geoshare::mesh {
namespace {

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (const std::int64_t v : {k.x, k.y, k.z}) {
      h ^= static_cast<std::uint64_t>(v);
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

std::int64_t CellCoord(double x) {
  constexpr double kLimit = 4.0e18;
  return static_cast<std::int64_t>(std::clamp(std::floor(x), -kLimit, kLimit));
}

double Luminance(const Rgba& c) {
  return (0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2]) / 255.0;
}

std::uint8_t ToByte(double x) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0));
}

constexpr double kAlbedoFloor = 0.05;
constexpr int kAlternations = 10;

}  // namespace

TriangleMesh DedupVertices(const TriangleMesh& mesh, double epsilon) {
  if (!(epsilon >= 0.0)) Fail(MeshErrc::kInvalidArgument, "epsilon must be >= 0");
  mesh.Validate();
  TriangleMesh out;
  std::vector<std::uint32_t> remap(mesh.positions.size());
  std::unordered_map<CellKey, std::vector<std::uint32_t>, CellHash> grid;
  const double eps2 = epsilon * epsilon;

  const auto key_of = [&](const Eigen::Vector3d& p) {
    if (epsilon == 0.0) {
      // Exact match: key on the coordinates themselves (+0.0f folds -0).
      const auto bits = [](double x) {
        return std::bit_cast<std::int32_t>(static_cast<float>(x) + 0.0f);
      };
      return CellKey{bits(p.x()), bits(p.y()), bits(p.z())};
    }
    return CellKey{CellCoord(p.x() / epsilon), CellCoord(p.y() / epsilon),
                   CellCoord(p.z() / epsilon)};
  };

  for (std::uint32_t v = 0; v < mesh.positions.size(); ++v) {
    const Eigen::Vector3d p = mesh.Position(v);
    const CellKey key = key_of(p);
    std::uint32_t match = std::numeric_limits<std::uint32_t>::max();
    const int reach = epsilon == 0.0 ? 0 : 1;
    for (int dx = -reach; dx <= reach; ++dx) {
      for (int dy = -reach; dy <= reach; ++dy) {
        for (int dz = -reach; dz <= reach; ++dz) {
          auto it = grid.find({key.x + dx, key.y + dy, key.z + dz});
          if (it == grid.end()) continue;
          for (const std::uint32_t kept : it->second) {
            if (kept >= match) break;
            if ((out.Position(kept) - p).squaredNorm() <= eps2) match = kept;
          }
        }
      }
    }
    if (match != std::numeric_limits<std::uint32_t>::max()) {
      remap[v] = match;
      continue;
    }
    const auto index = static_cast<std::uint32_t>(out.positions.size());
    out.positions.push_back(mesh.positions[v]);
    if (mesh.HasNormals()) out.normals.push_back(mesh.normals[v]);
    if (mesh.HasColors()) out.colors.push_back(mesh.colors[v]);
    grid[key].push_back(index);
    remap[v] = index;
  }

  const double diag = mesh.positions.empty() ? 0.0 : MeshBounds(mesh).Diagonal();
  const double min_area = 1e-12 * diag * diag;
  for (const auto& t : mesh.triangles) {
    const Triangle r{remap[t[0]], remap[t[1]], remap[t[2]]};
    if (r[0] == r[1] || r[1] == r[2] || r[0] == r[2]) continue;
    if (TriangleArea(out, r) < min_area) continue;
    out.triangles.push_back(r);
  }
  return out;
}

TriangleMesh ComputeNormals(const TriangleMesh& mesh) {
  if (mesh.triangles.empty()) Fail(MeshErrc::kNoTriangles, "mesh has no triangles");
  mesh.Validate();
  std::vector<Eigen::Vector3d> sum(mesh.positions.size(), Eigen::Vector3d::Zero());
  for (const auto& t : mesh.triangles) {
    const Eigen::Vector3d a = mesh.Position(t[0]);
    // Cross product length is twice the area, so this weights by area.
    const Eigen::Vector3d n = (mesh.Position(t[1]) - a).cross(mesh.Position(t[2]) - a);
    for (const auto v : t) sum[v] += n;
  }
  TriangleMesh out = mesh;
  out.normals.resize(mesh.positions.size());
  for (std::size_t v = 0; v < sum.size(); ++v) {
    const double len = sum[v].norm();
    out.normals[v] = len > 0.0 ? (sum[v] / len).cast<float>().normalized()
                               : Eigen::Vector3f::UnitZ();
  }
  return out;
}

DeshadeResult Deshade(const TriangleMesh& mesh) {
  if (!mesh.HasColors() || !mesh.HasNormals()) {
    Fail(MeshErrc::kMissingAttributes, "deshade needs vertex colors and normals");
  }
  mesh.Validate();
  const std::size_t n = mesh.positions.size();
  if (n < 10) {
    Fail(MeshErrc::kIlluminationUnderdetermined, "fewer than 10 vertices");
  }
  std::vector<Eigen::Vector3d> normals(n);
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (std::size_t v = 0; v < n; ++v) {
    normals[v] = mesh.normals[v].cast<double>();
    scatter += normals[v] * normals[v].transpose();
  }
  const Eigen::Vector3d spread =
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(scatter).eigenvalues();
  if (!(spread(1) > 1e-6 * spread(2))) {
    Fail(MeshErrc::kIlluminationUnderdetermined, "normals span fewer than 2 dimensions");
  }

  Eigen::VectorXd lum(static_cast<Eigen::Index>(n));
  for (std::size_t v = 0; v < n; ++v) lum(v) = Luminance(mesh.colors[v]);
  Eigen::VectorXd albedo = Eigen::VectorXd::Constant(lum.size(), lum.mean());

  // theta = (ambient, light * intensity); the hinge is handled by iterating
  // the set of vertices facing the light.
  Eigen::Vector4d theta(1.0, 0.0, 0.0, 0.0);
  const auto solve_light = [&] {
    std::vector<bool> active(n, true);
    for (int round = 0; round < 20; ++round) {
      Eigen::MatrixXd A(lum.size(), 4);
      for (std::size_t v = 0; v < n; ++v) {
        A(v, 0) = albedo(v);
        const Eigen::Vector3d row = active[v] ? Eigen::Vector3d(albedo(v) * normals[v])
                                              : Eigen::Vector3d::Zero();
        A.block<1, 3>(v, 1) = row.transpose();
      }
      theta = A.colPivHouseholderQr().solve(lum);
      bool changed = false;
      for (std::size_t v = 0; v < n; ++v) {
        const bool facing = normals[v].dot(theta.tail<3>()) > 0.0;
        changed |= facing != active[v];
        active[v] = facing;
      }
      if (!changed) break;
    }
  };

  DeshadeResult result;
  result.mesh = mesh;
  double ambient = 1.0;
  Eigen::Vector3d light = Eigen::Vector3d::UnitZ();
  for (int iter = 0; iter < kAlternations; ++iter) {
    solve_light();
    const double intensity = theta.tail<3>().norm();
    if (!(intensity > 0.01 * std::abs(theta(0)))) {
      result.lit = false;
      result.ambient = 1.0;
      result.light = Eigen::Vector3d::UnitZ();
      return result;
    }
    light = theta.tail<3>() / intensity;
    ambient = std::max(0.0, theta(0) / intensity);
    for (std::size_t v = 0; v < n; ++v) {
      const double shading = ambient + std::max(0.0, normals[v].dot(light));
      albedo(v) = shading > 1e-9 ? std::clamp(lum(v) / shading, kAlbedoFloor, 1.0) : 1.0;
    }
  }

  for (std::size_t v = 0; v < n; ++v) {
    const Rgba& c = mesh.colors[v];
    Rgba& o = result.mesh.colors[v];
    const double l = lum(v);
    if (l <= 0.0) {
      o = {ToByte(albedo(v)), ToByte(albedo(v)), ToByte(albedo(v)), c[3]};
      continue;
    }
    const double peak = std::max({c[0], c[1], c[2]}) / 255.0;
    const double k = std::min(albedo(v) / l, 1.0 / peak);
    for (int ch = 0; ch < 3; ++ch) o[ch] = ToByte(k * c[ch] / 255.0);
  }
  result.light = light;
  result.ambient = ambient;
  return result;
}

namespace {

std::vector<Eigen::Vector3d> SampleSurface(const TriangleMesh& mesh, int n,
                                           std::mt19937_64& rng) {
  std::vector<double> cumulative;
  cumulative.reserve(mesh.triangles.size());
  double total = 0.0;
  for (const auto& t : mesh.triangles) {
    total += TriangleArea(mesh, t);
    cumulative.push_back(total);
  }
  std::vector<Eigen::Vector3d> samples;
  for (std::uint32_t v = 0; v < mesh.positions.size(); ++v) {
    samples.push_back(mesh.Position(v));
  }
  if (!(total > 0.0)) return samples;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const double pick = u(rng) * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    const std::size_t f = std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1);
    const auto& t = mesh.triangles[f];
    const double r1 = std::sqrt(u(rng));
    const double r2 = u(rng);
    samples.push_back((1.0 - r1) * mesh.Position(t[0]) + r1 * (1.0 - r2) * mesh.Position(t[1]) +
                      r1 * r2 * mesh.Position(t[2]));
  }
  return samples;
}

double OneSided(const std::vector<Eigen::Vector3d>& samples, const TriangleBvh& target) {
  double worst = 0.0;
  for (const auto& p : samples) worst = std::max(worst, target.Distance(p));
  return worst;
}

}  // namespace

double HausdorffDistance(const TriangleMesh& a, const TriangleMesh& b, int n_samples,
                         std::uint64_t seed) {
  if (a.triangles.empty() || b.triangles.empty()) {
    Fail(MeshErrc::kEmptyMesh, "hausdorff distance needs two non-empty meshes");
  }
  if (n_samples < 100) Fail(MeshErrc::kInvalidArgument, "need at least 100 samples");
  std::mt19937_64 rng(seed);
  const auto samples_a = SampleSurface(a, n_samples, rng);
  const auto samples_b = SampleSurface(b, n_samples, rng);
  const TriangleBvh bvh_a(a);
  const TriangleBvh bvh_b(b);
  return std::max(OneSided(samples_a, bvh_b), OneSided(samples_b, bvh_a));
}

}  // namespace geoshare::mesh
