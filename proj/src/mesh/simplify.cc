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

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <utility>

#include <Eigen/Dense>

#include "geoshare/mesh/closest_point.h"
#include "geoshare/mesh/ops.h"

namespace geoshare::mesh {
namespace {

using Quadric = Eigen::Matrix4d;

constexpr double kBoundaryWeight = 1000.0;
// Optimal positions may leave the input bounds by this fraction of the
// diagonal; further out they fall back to an endpoint or the midpoint.
constexpr double kPlacementSlack = 0.01;
// New edges and faces are first capped at these multiples of the edge length
// and area of an equilateral tiling with the target face count. The caps grow
// by kSizeLimitGrowth whenever no admissible collapse is left.
constexpr double kEdgeLimit = 1.3;
constexpr double kAreaLimit = 1.3;
constexpr double kSizeLimitGrowth = 1.05;
// Vertex refinement: sweeps, the exponent of the local error norm, and the
// share of the worst local error a vertex needs to be revisited.
constexpr int kRefineSweeps = 10;
constexpr double kRefinePower = 16.0;
constexpr double kRefineFocus = 0.6;
// Sweeps stop once the worst local error improves by less than this share.
constexpr double kRefineGain = 0.01;
constexpr int kGoldenSteps = 8;
constexpr double kSearchReach = 0.1;

Quadric PlaneQuadric(const Eigen::Vector3d& unit_normal, const Eigen::Vector3d& point,
                     double weight) {
  Eigen::Vector4d plane;
  plane << unit_normal, -unit_normal.dot(point);
  return weight * plane * plane.transpose();
}

double Evaluate(const Quadric& q, const Eigen::Vector3d& x) {
  const Eigen::Vector4d h(x.x(), x.y(), x.z(), 1.0);
  return std::max(0.0, h.dot(q * h));
}

struct Candidate {
  double cost = 0.0;
  std::uint32_t a = 0;  // smaller endpoint index
  std::uint32_t b = 0;
  std::uint32_t keep = 0;
  std::uint32_t stamp_a = 0;
  std::uint32_t stamp_b = 0;
  Eigen::Vector3d position;
};

// Orders the heap so the cheapest edge, then the smallest (a, b), is on top.
struct LaterCandidate {
  bool operator()(const Candidate& x, const Candidate& y) const {
    if (x.cost != y.cost) return x.cost > y.cost;
    if (x.a != y.a) return x.a > y.a;
    return x.b > y.b;
  }
};

// Barycentric points at which a simplified face is compared to the input.
constexpr double kFaceSamples[][3] = {
    {1, 0, 0},         {0, 1, 0},         {0, 0, 1},
    {0.5, 0.5, 0},     {0, 0.5, 0.5},     {0.5, 0, 0.5},
    {1. / 3, 1. / 3, 1. / 3},
    {2. / 3, 1. / 6, 1. / 6}, {1. / 6, 2. / 3, 1. / 6}, {1. / 6, 1. / 6, 2. / 3}};

class Simplifier {
 public:
  explicit Simplifier(const TriangleMesh& mesh)
      : bounds_(MeshBounds(mesh)), tris_(mesh.triangles) {
    const std::size_t n = mesh.positions.size();
    pos_.resize(n);
    for (std::uint32_t v = 0; v < n; ++v) pos_[v] = mesh.Position(v);
    quadric_.assign(n, Quadric::Zero());
    alive_vertex_.assign(n, true);
    locked_.assign(n, false);
    boundary_.assign(n, false);
    version_.assign(n, 0);
    vtris_.resize(n);
    alive_tri_.assign(tris_.size(), true);
    live_ = tris_.size();
    const double diag = bounds_.Diagonal();
    placement_ = bounds_;
    placement_.min.array() -= kPlacementSlack * diag;
    placement_.max.array() += kPlacementSlack * diag;
    min_double_area_ = 2e-12 * diag * diag;

    std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<std::uint32_t>> edges;
    for (std::uint32_t f = 0; f < tris_.size(); ++f) {
      const auto& t = tris_[f];
      const Eigen::Vector3d n_raw = FaceNormal(t);
      const double len = n_raw.norm();
      for (int i = 0; i < 3; ++i) {
        vtris_[t[i]].push_back(f);
        edges[std::minmax(t[i], t[(i + 1) % 3])].push_back(f);
      }
      if (len > 0.0) {
        const Quadric q = PlaneQuadric(n_raw / len, pos_[t[0]], 0.5 * len);
        for (const auto v : t) quadric_[v] += q;
      }
    }
    for (const auto& [edge, faces] : edges) {
      if (faces.size() > 2) {
        locked_[edge.first] = locked_[edge.second] = true;
      } else if (faces.size() == 1) {
        boundary_[edge.first] = boundary_[edge.second] = true;
        const Eigen::Vector3d e = pos_[edge.second] - pos_[edge.first];
        const Eigen::Vector3d side = e.cross(FaceNormal(tris_[faces[0]]));
        const double len = side.norm();
        if (len > 0.0) {
          const Quadric q = PlaneQuadric(side / len, pos_[edge.first],
                                         kBoundaryWeight * e.squaredNorm());
          quadric_[edge.first] += q;
          quadric_[edge.second] += q;
        }
      }
    }
  }

  // Collapses edges cheapest first until `target` faces remain. Size caps
  // start at the equilateral tiling of the surface and are relaxed each time
  // the queue runs dry; once they exceed the whole mesh they no longer bind.
  void Run(std::size_t target, double surface_area) {
    const double tile_area = surface_area / static_cast<double>(target);
    const double tile_edge = std::sqrt(4.0 / std::sqrt(3.0) * tile_area);
    double edge_limit = kEdgeLimit * tile_edge;
    double area_limit = kAreaLimit * tile_area;
    const double diag = bounds_.Diagonal();
    for (;;) {
      const bool unbounded = edge_limit > diag && area_limit > diag * diag;
      max_edge2_ = unbounded ? std::numeric_limits<double>::infinity()
                             : edge_limit * edge_limit;
      max_double_area_ = unbounded ? std::numeric_limits<double>::infinity()
                                   : 2.0 * area_limit;
      SeedQueue();
      Drain(target);
      if (live_ <= target || unbounded) return;
      edge_limit *= kSizeLimitGrowth;
      area_limit *= kSizeLimitGrowth;
    }
  }

  // Moves free vertices one axis at a time (normal, then two tangents) to
  // shrink the L^p norm of the distances between the faces around them and
  // the input. Face samples are measured against `surface`; every input
  // sample is charged to its closest simplified face.
  void Refine(const TriangleBvh& surface, const std::vector<Eigen::Vector3d>& samples) {
    double previous = std::numeric_limits<double>::infinity();
    for (int sweep = 0; sweep < kRefineSweeps; ++sweep) {
      AssignSamples(samples);
      std::vector<double> local(pos_.size(), 0.0);
      std::vector<std::uint32_t> hints;
      double worst = 0.0;
      for (std::uint32_t v = 0; v < pos_.size(); ++v) {
        if (!Movable(v)) continue;
        hints.clear();
        local[v] = LocalError(v, surface, samples, 0.0, hints);
        worst = std::max(worst, local[v]);
      }
      if (!(worst > 0.0) || worst > (1.0 - kRefineGain) * previous) return;
      previous = worst;
      for (std::uint32_t v = 0; v < pos_.size(); ++v) {
        if (Movable(v) && local[v] >= kRefineFocus * worst) {
          RefineVertex(v, surface, samples);
        }
      }
    }
  }

  TriangleMesh Extract(const TriangleMesh& input) const {
    TriangleMesh out;
    std::vector<std::uint32_t> remap(pos_.size(), 0);
    for (std::uint32_t v = 0; v < pos_.size(); ++v) {
      if (!alive_vertex_[v]) continue;
      remap[v] = static_cast<std::uint32_t>(out.positions.size());
      out.positions.push_back(pos_[v].cast<float>());
      if (input.HasColors()) out.colors.push_back(input.colors[v]);
    }
    for (std::uint32_t f = 0; f < tris_.size(); ++f) {
      if (!alive_tri_[f]) continue;
      const auto& t = tris_[f];
      out.triangles.push_back({remap[t[0]], remap[t[1]], remap[t[2]]});
    }
    if (input.HasNormals() && !out.triangles.empty()) out = ComputeNormals(out);
    return out;
  }

  std::size_t collapses() const { return collapses_; }

 private:
  Eigen::Vector3d FaceNormal(const Triangle& t) const {
    return (pos_[t[1]] - pos_[t[0]]).cross(pos_[t[2]] - pos_[t[0]]);
  }

  std::set<std::uint32_t> Neighbors(std::uint32_t v) const {
    std::set<std::uint32_t> out;
    for (const auto f : vtris_[v]) {
      for (const auto w : tris_[f]) {
        if (w != v) out.insert(w);
      }
    }
    return out;
  }

  bool Movable(std::uint32_t v) const {
    return alive_vertex_[v] && !locked_[v] && !boundary_[v] && !vtris_[v].empty();
  }

  void SeedQueue() {
    heap_ = {};
    std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::uint32_t f = 0; f < tris_.size(); ++f) {
      if (!alive_tri_[f]) continue;
      for (int i = 0; i < 3; ++i) edges.insert(std::minmax(tris_[f][i], tris_[f][(i + 1) % 3]));
    }
    for (const auto& [a, b] : edges) Push(a, b);
  }

  void Drain(std::size_t target) {
    while (live_ > target && !heap_.empty()) {
      const Candidate c = heap_.top();
      heap_.pop();
      if (!alive_vertex_[c.a] || !alive_vertex_[c.b] || version_[c.a] != c.stamp_a ||
          version_[c.b] != c.stamp_b) {
        continue;
      }
      const std::uint32_t remove = c.keep == c.a ? c.b : c.a;
      if (!CanCollapse(c.keep, remove, c.position)) continue;
      Collapse(c.keep, remove, c.position);
    }
  }

  void Push(std::uint32_t u, std::uint32_t w) {
    const std::uint32_t a = std::min(u, w);
    const std::uint32_t b = std::max(u, w);
    if (locked_[a] && locked_[b]) return;
    Candidate c;
    c.a = a;
    c.b = b;
    c.stamp_a = version_[a];
    c.stamp_b = version_[b];
    const Quadric q = quadric_[a] + quadric_[b];
    if (locked_[a] || locked_[b]) {
      c.keep = locked_[a] ? a : b;
      c.position = pos_[c.keep];
    } else {
      c.keep = a;
      const Eigen::Vector3d mid = 0.5 * (pos_[a] + pos_[b]);
      Eigen::Vector3d best = pos_[a];
      double best_cost = Evaluate(q, pos_[a]);
      for (const Eigen::Vector3d& x : {pos_[b], mid}) {
        const double cost = Evaluate(q, x);
        if (cost < best_cost) {
          best_cost = cost;
          best = x;
        }
      }
      const Eigen::FullPivLU<Eigen::Matrix3d> lu(q.topLeftCorner<3, 3>());
      if (lu.isInvertible()) {
        const Eigen::Vector3d x = lu.solve(-q.block<3, 1>(0, 3));
        if (x.allFinite() && placement_.Contains(x) && Evaluate(q, x) <= best_cost) {
          best = x;
        }
      }
      c.position = best;
    }
    c.cost = Evaluate(q, c.position);
    heap_.push(c);
  }

  bool CanCollapse(std::uint32_t keep, std::uint32_t remove,
                   const Eigen::Vector3d& p) const {
    // Link condition: the shared neighbors are exactly the apexes of the
    // faces on the edge.
    std::set<std::uint32_t> apexes;
    int shared_faces = 0;
    for (const auto f : vtris_[remove]) {
      const auto& t = tris_[f];
      if (std::find(t.begin(), t.end(), keep) == t.end()) continue;
      ++shared_faces;
      for (const auto w : t) {
        if (w != keep && w != remove) apexes.insert(w);
      }
    }
    if (shared_faces == 0 || shared_faces > 2) return false;
    const auto nk = Neighbors(keep);
    const auto nr = Neighbors(remove);
    std::vector<std::uint32_t> common;
    std::set_intersection(nk.begin(), nk.end(), nr.begin(), nr.end(),
                          std::back_inserter(common));
    if (common.size() != apexes.size() ||
        !std::equal(common.begin(), common.end(), apexes.begin())) {
      return false;
    }

    for (const std::uint32_t v : {keep, remove}) {
      for (const auto f : vtris_[v]) {
        const auto& t = tris_[f];
        const bool has_keep = std::find(t.begin(), t.end(), keep) != t.end();
        const bool has_remove = std::find(t.begin(), t.end(), remove) != t.end();
        if (has_keep && has_remove) continue;
        Eigen::Vector3d corner[3];
        for (int i = 0; i < 3; ++i) {
          corner[i] = (t[i] == keep || t[i] == remove) ? p : pos_[t[i]];
        }
        const Eigen::Vector3d after = (corner[1] - corner[0]).cross(corner[2] - corner[0]);
        const double double_area = after.norm();
        if (double_area < min_double_area_ || double_area > max_double_area_) return false;
        if (FaceNormal(t).dot(after) < 0.0) return false;
        for (int i = 0; i < 3; ++i) {
          if ((corner[i] - corner[(i + 1) % 3]).squaredNorm() > max_edge2_) return false;
        }
      }
    }
    return true;
  }

  void Collapse(std::uint32_t keep, std::uint32_t remove, const Eigen::Vector3d& p) {
    pos_[keep] = p;
    quadric_[keep] += quadric_[remove];
    alive_vertex_[remove] = false;
    ++version_[keep];
    ++version_[remove];
    for (const auto f : vtris_[remove]) {
      auto& t = tris_[f];
      if (std::find(t.begin(), t.end(), keep) != t.end()) {
        alive_tri_[f] = false;
        --live_;
        for (const auto w : t) {
          if (w != remove) std::erase(vtris_[w], f);
        }
        continue;
      }
      for (auto& v : t) {
        if (v == remove) v = keep;
      }
      vtris_[keep].push_back(f);
    }
    vtris_[remove].clear();
    ++collapses_;
    for (const auto w : Neighbors(keep)) Push(keep, w);
  }

  void AssignSamples(const std::vector<Eigen::Vector3d>& samples) {
    TriangleMesh current;
    current.positions.reserve(pos_.size());
    for (const auto& p : pos_) current.positions.push_back(p.cast<float>());
    std::vector<std::uint32_t> face_of;
    for (std::uint32_t f = 0; f < tris_.size(); ++f) {
      if (!alive_tri_[f]) continue;
      current.triangles.push_back(tris_[f]);
      face_of.push_back(f);
    }
    const TriangleBvh bvh(current);
    assigned_.assign(tris_.size(), {});
    for (std::uint32_t s = 0; s < samples.size(); ++s) {
      assigned_[face_of[bvh.Closest(samples[s]).triangle]].push_back(s);
    }
  }

  // L^power norm of the local distances, or their maximum for power 0.
  // \`hints\` caches the input triangle last found for each face sample.
  double LocalError(std::uint32_t v, const TriangleBvh& surface,
                    const std::vector<Eigen::Vector3d>& samples, double power,
                    std::vector<std::uint32_t>& hints) const {
    double acc = 0.0;
    const auto add = [&](double d) {
      acc = power > 0.0 ? acc + std::pow(d, power) : std::max(acc, d);
    };
    constexpr std::size_t kPerFace = std::size(kFaceSamples);
    hints.resize(vtris_[v].size() * kPerFace, std::numeric_limits<std::uint32_t>::max());
    for (std::size_t i = 0; i < vtris_[v].size(); ++i) {
      const auto& t = tris_[vtris_[v][i]];
      for (std::size_t k = 0; k < kPerFace; ++k) {
        const auto& b = kFaceSamples[k];
        const auto hit = surface.Closest(
            b[0] * pos_[t[0]] + b[1] * pos_[t[1]] + b[2] * pos_[t[2]], hints[i * kPerFace + k]);
        hints[i * kPerFace + k] = hit.triangle;
        add(hit.distance);
      }
    }
    for (const auto f : vtris_[v]) {
      for (const auto s : assigned_[f]) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto g : vtris_[v]) {
          const auto& t = tris_[g];
          best = std::min(best, (ClosestPointOnTriangle(samples[s], pos_[t[0]], pos_[t[1]],
                                                        pos_[t[2]]) -
                                 samples[s]).norm());
        }
        add(best);
      }
    }
    return acc;
  }

  void RefineVertex(std::uint32_t v, const TriangleBvh& surface,
                    const std::vector<Eigen::Vector3d>& samples) {
    Eigen::Vector3d normal = Eigen::Vector3d::Zero();
    double reach = 0.0;
    std::vector<Eigen::Vector3d> before;
    for (const auto f : vtris_[v]) {
      before.push_back(FaceNormal(tris_[f]));
      normal += before.back();
      for (const auto w : tris_[f]) reach = std::max(reach, (pos_[w] - pos_[v]).norm());
    }
    if (!(normal.norm() > 0.0)) return;
    normal.normalize();
    const Eigen::Vector3d tangent = normal.unitOrthogonal();
    const Eigen::Vector3d axes[] = {normal, tangent, normal.cross(tangent)};
    std::vector<std::uint32_t> hints;

    for (const auto& axis : axes) {
      const Eigen::Vector3d origin = pos_[v];
      const auto error = [&](double t) {
        pos_[v] = origin + t * axis;
        for (std::size_t i = 0; i < before.size(); ++i) {
          const Eigen::Vector3d n = FaceNormal(tris_[vtris_[v][i]]);
          if (n.norm() < min_double_area_ || n.dot(before[i]) <= 0.0) {
            return std::numeric_limits<double>::infinity();
          }
        }
        return LocalError(v, surface, samples, kRefinePower, hints);
      };
      // Golden-section search over a fraction of the one-ring reach.
      const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
      double lo = -kSearchReach * reach, hi = kSearchReach * reach;
      double x1 = hi - ratio * (hi - lo), x2 = lo + ratio * (hi - lo);
      double f1 = error(x1), f2 = error(x2);
      for (int i = 0; i < kGoldenSteps; ++i) {
        if (f1 < f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - ratio * (hi - lo);
          f1 = error(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + ratio * (hi - lo);
          f2 = error(x2);
        }
      }
      const double t = f1 < f2 ? x1 : x2;
      const double best = std::min(f1, f2);
      pos_[v] = best < error(0.0) ? origin + t * axis : origin;
    }
  }

  Aabb bounds_;
  Aabb placement_;
  std::vector<Eigen::Vector3d> pos_;
  std::vector<Quadric> quadric_;
  std::vector<bool> alive_vertex_;
  std::vector<bool> locked_;
  std::vector<bool> boundary_;
  std::vector<std::uint32_t> version_;
  std::vector<Triangle> tris_;
  std::vector<bool> alive_tri_;
  std::vector<std::vector<std::uint32_t>> vtris_;
  std::vector<std::vector<std::uint32_t>> assigned_;
  std::priority_queue<Candidate, std::vector<Candidate>, LaterCandidate> heap_;
  std::size_t live_ = 0;
  std::size_t collapses_ = 0;
  double min_double_area_ = 0.0;
  double max_double_area_ = std::numeric_limits<double>::infinity();
  double max_edge2_ = std::numeric_limits<double>::infinity();
};

}  // namespace

SimplifyResult Simplify(const TriangleMesh& mesh, double target_ratio) {
  if (!(target_ratio > 0.0 && target_ratio <= 1.0)) {
    Fail(MeshErrc::kInvalidRatio, "target ratio must be in (0, 1]");
  }
  mesh.Validate();
  SimplifyResult result;
  result.mesh = mesh;
  if (target_ratio == 1.0 || mesh.triangles.empty()) return result;

  // The small slack keeps ratio * M from rounding up past an exact integer.
  const auto target = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(
             target_ratio * static_cast<double>(mesh.triangles.size()) - 1e-9)));
  Simplifier simplifier(mesh);
  simplifier.Run(target, SurfaceArea(mesh));
  if (simplifier.collapses() == 0) return result;

  std::vector<Eigen::Vector3d> samples;
  samples.reserve(mesh.positions.size() + mesh.triangles.size());
  for (std::uint32_t v = 0; v < mesh.positions.size(); ++v) {
    samples.push_back(mesh.Position(v));
  }
  for (const auto& t : mesh.triangles) {
    samples.push_back((mesh.Position(t[0]) + mesh.Position(t[1]) + mesh.Position(t[2])) / 3.0);
  }
  const TriangleBvh input_bvh(mesh);
  simplifier.Refine(input_bvh, samples);

  result.mesh = simplifier.Extract(mesh);
  result.collapses = simplifier.collapses();
  const TriangleBvh bvh(result.mesh);
  for (const auto& s : samples) {
    result.max_deviation = std::max(result.max_deviation, bvh.Distance(s));
  }
  return result;
}

}  // namespace geoshare::mesh
