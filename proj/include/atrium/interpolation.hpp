#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "atrium/deformation_graph.hpp"
#include "atrium/geometry.hpp"
#include "atrium/scene_graph.hpp"
#include "atrium/se3.hpp"

namespace atrium {

namespace detail {

/// Nearest-control lookup over a uniform spatial hash. Controls are sparse
/// (one per subsample cell), so widening Chebyshev rings around the query
/// cell finds the k nearest after a handful of cells. Once rings 0..r have
/// been visited, every unseen point is at least r*cell away, which gives
/// the stopping rule.
class ControlIndex {
 public:
  ControlIndex(std::vector<Vec3> points, double cell)
      : points_(std::move(points)), cell_(cell) {
    for (size_t i = 0; i < points_.size(); ++i) {
      CellKey c = cell_of(points_[i], cell_);
      hash_[c].push_back(static_cast<int>(i));
      key_lo_.x = std::min(key_lo_.x, c.x);
      key_lo_.y = std::min(key_lo_.y, c.y);
      key_lo_.z = std::min(key_lo_.z, c.z);
      key_hi_.x = std::max(key_hi_.x, c.x);
      key_hi_.y = std::max(key_hi_.y, c.y);
      key_hi_.z = std::max(key_hi_.z, c.z);
    }
  }

  /// The k nearest point indices (ascending distance, index tiebreak) and
  /// the distance to the (k+1)-th, or -1 when no (k+1)-th exists.
  std::vector<std::pair<double, int>> nearest(const Vec3& x, int k, double* next_dist) const {
    std::vector<std::pair<double, int>> found;
    if (points_.empty()) {
      *next_dist = -1.0;
      return found;
    }
    CellKey c0 = cell_of(x, cell_);
    int last_ring = static_cast<int>(
        std::max({std::abs(c0.x - key_lo_.x), std::abs(c0.x - key_hi_.x),
                  std::abs(c0.y - key_lo_.y), std::abs(c0.y - key_hi_.y),
                  std::abs(c0.z - key_lo_.z), std::abs(c0.z - key_hi_.z)}));
    const int want = k + 1;
    for (int ring = 0; ring <= last_ring; ++ring) {
      for (int dz = -ring; dz <= ring; ++dz)
        for (int dy = -ring; dy <= ring; ++dy)
          for (int dx = -ring; dx <= ring; ++dx) {
            if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
            auto it = hash_.find({c0.x + dx, c0.y + dy, c0.z + dz});
            if (it == hash_.end()) continue;
            for (int idx : it->second) found.push_back({(points_[idx] - x).norm(), idx});
          }
      std::sort(found.begin(), found.end());
      if (static_cast<int>(found.size()) >= want && found[want - 1].first <= ring * cell_)
        break;
    }
    if (static_cast<int>(found.size()) >= want) {
      *next_dist = found[want - 1].first;
      found.resize(k);
    } else {
      *next_dist = -1.0;
      if (static_cast<int>(found.size()) > k) found.resize(k);
    }
    return found;
  }

 private:
  std::vector<Vec3> points_;
  double cell_;
  std::map<CellKey, std::vector<int>> hash_;
  CellKey key_lo_{INT64_MAX, INT64_MAX, INT64_MAX};
  CellKey key_hi_{INT64_MIN, INT64_MIN, INT64_MIN};
};

}  // namespace detail

struct InterpolationParams {
  int knn = 4;
  double control_cell = 1.0;  ///< match the deformation graph subsample spacing
};

/// Blend a point through the optimized control poses:
///   phi(x) = sum_k w_k (R_k (x - g_k) + t_k)
/// over the knn nearest controls, w_k proportional to (1 - d_k/d_{k+1})^2 and
/// normalized. When no (k+1)-th control exists, or the weights degenerate
/// because d_k == d_{k+1} for all k, the blend falls back to uniform weights.
class MeshDeformer {
 public:
  MeshDeformer(const DeformationGraph& dg, const std::map<NodeId, Se3>& optimized,
               const InterpolationParams& p = {})
      : params_(p) {
    std::vector<Vec3> points;
    for (const auto& [n, dn] : dg.nodes) {
      if (dn.kind != DefNodeKind::ControlPoint) continue;
      points.push_back(dn.pose.t);
      controls_.push_back({dn.pose.t, optimized.at(n)});
    }
    index_ = std::make_unique<detail::ControlIndex>(std::move(points), p.control_cell);
  }

  bool empty() const { return controls_.empty(); }

  Vec3 operator()(const Vec3& x) const {
    if (controls_.empty()) return x;
    double next = -1.0;
    auto near = index_->nearest(x, params_.knn, &next);
    std::vector<double> w(near.size(), 1.0);
    if (next > 0.0) {
      double total = 0.0;
      for (size_t k = 0; k < near.size(); ++k) {
        double v = 1.0 - near[k].first / next;
        w[k] = v * v;
        total += w[k];
      }
      if (total > 1e-12)
        for (double& v : w) v /= total;
      else
        std::fill(w.begin(), w.end(), 1.0 / near.size());
    } else {
      std::fill(w.begin(), w.end(), 1.0 / near.size());
    }
    Vec3 out = Vec3::Zero();
    for (size_t k = 0; k < near.size(); ++k) {
      const auto& [g, T] = controls_[near[k].second];
      out += w[k] * (T.rotation() * (x - g) + T.t);
    }
    return out;
  }

 private:
  InterpolationParams params_;
  std::vector<std::pair<Vec3, Se3>> controls_;  ///< (original position, optimized pose)
  std::unique_ptr<detail::ControlIndex> index_;
};

/// Push the optimized deformation back through the scene graph: mesh points
/// are blended through the control poses, agents and places take their
/// optimized values directly, objects are recomputed from their members, and
/// room/building centroids are refreshed from the moved children.
inline SceneGraph apply_deformation(const SceneGraph& g, const DeformationGraph& dg,
                                    const std::map<NodeId, Se3>& optimized,
                                    const InterpolationParams& p = {}) {
  SceneGraph out = g.snapshot();
  MeshDeformer deform(dg, optimized, p);

  for (NodeId n : g.nodes_in_layer(Layer::Mesh)) {
    auto a = std::get<SurfacePointAttrs>(g.node(n).attrs);
    a.position = deform(a.position);
    out.set_attrs(n, a);
  }
  for (NodeId n : g.nodes_in_layer(Layer::ObjectsAgents)) {
    if (const auto* ag = std::get_if<AgentAttrs>(&g.node(n).attrs)) {
      auto a = *ag;
      if (auto it = optimized.find(n); it != optimized.end()) a.pose = it->second;
      out.set_attrs(n, a);
    }
  }
  for (NodeId n : g.nodes_in_layer(Layer::Places)) {
    auto a = std::get<PlaceAttrs>(g.node(n).attrs);
    if (auto it = optimized.find(n); it != optimized.end()) a.position = it->second.t;
    for (Vec3& b : a.basis_points) b = deform(b);
    out.set_attrs(n, a);
  }
  for (NodeId n : g.nodes_in_layer(Layer::ObjectsAgents)) {
    if (const auto* ob = std::get_if<ObjectAttrs>(&g.node(n).attrs)) {
      auto a = *ob;
      if (!a.members.empty()) {
        Vec3 c = Vec3::Zero();
        Aabb box;
        for (NodeId m : a.members) {
          const Vec3& pm = std::get<SurfacePointAttrs>(out.node(m).attrs).position;
          c += pm;
          box.expand(pm);
        }
        a.centroid = c / static_cast<double>(a.members.size());
        a.bbox = box;
      }
      out.set_attrs(n, a);
    }
  }
  for (NodeId n : g.nodes_in_layer(Layer::Rooms)) {
    auto a = std::get<RoomAttrs>(g.node(n).attrs);
    Vec3 c = Vec3::Zero();
    int count = 0;
    for (NodeId m : out.neighbors_in_layer(n, Layer::Places)) {
      c += std::get<PlaceAttrs>(out.node(m).attrs).position;
      ++count;
    }
    if (count > 0) a.centroid = c / count;
    out.set_attrs(n, a);
  }
  for (NodeId n : g.nodes_in_layer(Layer::Building)) {
    auto a = std::get<BuildingAttrs>(g.node(n).attrs);
    Vec3 c = Vec3::Zero();
    int count = 0;
    for (NodeId m : out.neighbors_in_layer(n, Layer::Rooms)) {
      c += std::get<RoomAttrs>(out.node(m).attrs).centroid;
      ++count;
    }
    if (count > 0) a.centroid = c / count;
    out.set_attrs(n, a);
  }
  return out;
}

}  // namespace atrium
