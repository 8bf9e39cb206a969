#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "atrium/esdf.hpp"
#include "atrium/geometry.hpp"
#include "atrium/gvd.hpp"
#include "atrium/objects.hpp"
#include "atrium/observation.hpp"
#include "atrium/places.hpp"
#include "atrium/scene_graph.hpp"
#include "atrium/voxel_grid.hpp"

namespace atrium {

struct FrontendConfig {
  Aabb map_bounds;           ///< volume the map grid covers (odometry frame)
  double resolution = 0.1;   ///< voxel edge length, meters
  double active_radius = 8.0;  ///< half-extent of the box recomputed per keyframe
  double window_margin = 1.0;  ///< boundary band excluded from the GVD diff
  GvdParams gvd;
  double place_hash_cell = 1.0;
  ObjectParams objects;  ///< cluster_eps <= 0 selects 2.5 * resolution
};

/// Builds the metric-semantic layers incrementally, one keyframe at a time,
/// entirely in the odometry frame: occupancy integration, windowed distance
/// field and GVD refresh, place clustering, object clustering, and the
/// interlayer edges. The owned graph is never optimized; the backend corrects
/// a snapshot of it.
class Frontend {
 public:
  explicit Frontend(const FrontendConfig& cfg)
      : cfg_(cfg),
        grid_(cfg.map_bounds.min, cfg.resolution,
              dim(cfg.map_bounds.max.x() - cfg.map_bounds.min.x(), cfg.resolution),
              dim(cfg.map_bounds.max.y() - cfg.map_bounds.min.y(), cfg.resolution),
              dim(cfg.map_bounds.max.z() - cfg.map_bounds.min.z(), cfg.resolution),
              VoxelState::Unknown),
        clustering_(cfg.place_hash_cell) {
    if (cfg_.objects.cluster_eps <= 0) cfg_.objects.cluster_eps = 2.5 * cfg.resolution;
  }

  struct KeyframeStats {
    NodeId agent = kInvalidNode;
    size_t new_points = 0;
    size_t places_added = 0, places_removed = 0;
    size_t objects_created = 0, objects_updated = 0;
  };

  /// Integrate one keyframe. The observation is given in the sensor frame and
  /// placed into the map at the odometry pose.
  KeyframeStats integrate(const Se3& odom_pose, const Observation& sensor_obs,
                          int64_t keyframe_index) {
    Observation obs = transform_observation(sensor_obs, odom_pose);
    KeyframeStats stats;

    for (const Vec3& p : obs.free_cells) {
      if (!grid_.in_bounds_point(p)) continue;
      VoxelIndex v = grid_.cell_at(p);
      if (grid_.state(v) == VoxelState::Unknown) grid_.set_state(v, VoxelState::Free);
    }

    std::vector<NodeId> fresh;
    for (const auto& pt : obs.points) {
      if (!grid_.in_bounds_point(pt.position)) continue;
      VoxelIndex v = grid_.cell_at(pt.position);
      size_t lin = grid_.linear(v);
      if (grid_.state(v) != VoxelState::Occupied) {
        grid_.set_state(v, VoxelState::Occupied);
        grid_.set_label(v, pt.label);
        grid_.set_landmark(v, pt.landmark);
      }
      if (!point_node_.count(lin)) {
        SurfacePointAttrs a;
        a.position = grid_.center(v);
        a.label = pt.label;
        a.landmark_id = pt.landmark;
        a.first_keyframe = keyframe_index;
        NodeId n = graph_.add_node(Layer::Mesh, a);
        point_node_[lin] = n;
        fresh.push_back(n);
      }
    }
    stats.new_points = fresh.size();

    AgentAttrs aa;
    aa.pose = odom_pose;
    aa.keyframe = keyframe_index;
    if (!obs.visible_landmarks.empty()) {
      double w = 1.0 / double(obs.visible_landmarks.size());
      for (int64_t l : obs.visible_landmarks) aa.appearance[l] = w;
    }
    stats.agent = graph_.add_node(Layer::ObjectsAgents, aa);
    agents_.push_back(stats.agent);

    auto& anchors = anchors_[stats.agent];
    for (const auto& pt : obs.points)
      if (pt.landmark >= 0 && pt.feature >= 0) anchors[pt.feature] = pt.position;

    auto [lo, hi] = window_box(odom_pose.t, cfg_.active_radius);
    EsdfField f = compute_esdf(grid_, lo, hi);
    auto fresh_gvd = extract_gvd(grid_, f, cfg_.gvd);
    auto [dlo, dhi] = window_box(odom_pose.t, cfg_.active_radius - cfg_.window_margin);
    auto [added, removed] = sync_gvd(fresh_gvd, dlo, dhi);
    stats.places_added = added;
    stats.places_removed = removed;

    auto objs = update_objects(graph_, fresh, cfg_.objects);
    stats.objects_created = objs.created.size();
    stats.objects_updated = objs.updated.size();

    std::vector<NodeId> reconnect = objs.created;
    reconnect.insert(reconnect.end(), objs.updated.begin(), objs.updated.end());
    reconnect.push_back(stats.agent);
    connect_to_places(reconnect);
    return stats;
  }

  /// Recompute the distance field and GVD over the whole observed map and
  /// reconcile the place layer against it, then refresh every interlayer
  /// connection. Called once at the end of a run.
  void refresh_full() {
    EsdfField f = compute_esdf(grid_);
    auto fresh_gvd = extract_gvd(grid_, f, cfg_.gvd);
    sync_gvd(fresh_gvd, {0, 0, 0}, {grid_.nx() - 1, grid_.ny() - 1, grid_.nz() - 1});
    std::vector<NodeId> all;
    for (NodeId n : graph_.nodes_in_layer(Layer::ObjectsAgents)) all.push_back(n);
    connect_to_places(all);
  }

  const SceneGraph& graph() const { return graph_; }
  SceneGraph& graph() { return graph_; }
  SceneGraph snapshot() const { return graph_.snapshot(); }
  const VoxelGrid& grid() const { return grid_; }
  const std::map<size_t, GvdVoxel>& gvd() const { return live_gvd_; }
  const std::vector<NodeId>& agents() const { return agents_; }
  const FrontendConfig& config() const { return cfg_; }

  /// Clearance of each place-place edge (canonical node-id pairs).
  const std::map<std::pair<NodeId, NodeId>, double>& place_edge_clearance() const {
    return edge_clearance_;
  }

  /// Per-agent feature anchor points (odometry frame) for registration.
  const std::map<NodeId, std::map<int64_t, Vec3>>& anchors() const { return anchors_; }

 private:
  static int dim(double extent, double res) {
    int n = static_cast<int>(std::ceil(extent / res - 1e-9));
    return std::max(n, 1);
  }

  std::pair<VoxelIndex, VoxelIndex> window_box(const Vec3& c, double r) const {
    VoxelIndex lo = grid_.cell_at(clamp_point(c - Vec3::Constant(r)));
    VoxelIndex hi = grid_.cell_at(clamp_point(c + Vec3::Constant(r)));
    return {lo, hi};
  }

  Vec3 clamp_point(const Vec3& p) const {
    Vec3 eps = Vec3::Constant(grid_.resolution() * 1e-3);
    Vec3 lo = cfg_.map_bounds.min + eps, hi = cfg_.map_bounds.max - eps;
    return p.cwiseMax(lo).cwiseMin(hi);
  }

  /// Diff `fresh` against the live GVD inside [dlo,dhi], update clusters, and
  /// mirror the result into the place layer. Returns {places added, removed}.
  std::pair<size_t, size_t> sync_gvd(const std::map<size_t, GvdVoxel>& fresh,
                                     VoxelIndex dlo, VoxelIndex dhi) {
    auto in_region = [&](size_t lin) {
      VoxelIndex v = grid_.from_linear(lin);
      return v.x >= dlo.x && v.y >= dlo.y && v.z >= dlo.z && v.x <= dhi.x &&
             v.y <= dhi.y && v.z <= dhi.z;
    };

    std::vector<size_t> removed, added;
    PlaceClustering::UpdateResult r;
    for (auto it = live_gvd_.begin(); it != live_gvd_.end();) {
      if (in_region(it->first) && !fresh.count(it->first)) {
        removed.push_back(it->first);
        it = live_gvd_.erase(it);
      } else {
        ++it;
      }
    }
    for (const auto& [lin, gv] : fresh) {
      if (!in_region(lin)) continue;
      auto it = live_gvd_.find(lin);
      if (it == live_gvd_.end()) {
        live_gvd_.emplace(lin, gv);
        added.push_back(lin);
      } else {
        bool changed = it->second.distance != gv.distance ||
                       it->second.basis_points.size() != gv.basis_points.size();
        it->second = gv;
        if (changed) {
          int c = clustering_.cluster_of(lin);
          if (c >= 0) r.touched.insert(c);
        }
      }
    }

    auto orphaned = clustering_.remove_voxels(removed, r);
    added.insert(added.end(), orphaned.begin(), orphaned.end());
    clustering_.insert(grid_, live_gvd_, added, r);

    // retired clusters: drop their place nodes, remembering stranded children
    size_t n_removed = 0;
    std::vector<NodeId> displaced;
    for (int c : r.retired) {
      auto it = place_node_.find(c);
      if (it == place_node_.end()) continue;
      NodeId n = it->second;
      for (NodeId nb : graph_.neighbors_in_layer(n, Layer::ObjectsAgents))
        displaced.push_back(nb);
      for (auto eit = edge_clearance_.begin(); eit != edge_clearance_.end();)
        eit = (eit->first.first == n || eit->first.second == n)
                  ? edge_clearance_.erase(eit)
                  : std::next(eit);
      graph_.remove_node(n);
      place_node_.erase(it);
      ++n_removed;
    }

    // touched clusters: create or refresh their place nodes
    size_t n_added = 0;
    for (int c : r.touched) {
      if (!clustering_.clusters().count(c)) continue;
      size_t rep = clustering_.representative(c, live_gvd_);
      const GvdVoxel& gv = live_gvd_.at(rep);
      PlaceAttrs pa;
      pa.position = gv.position;
      pa.distance = gv.distance;
      pa.num_basis_points = static_cast<int>(gv.basis_points.size());
      pa.basis_points = gv.basis_points;
      auto it = place_node_.find(c);
      if (it == place_node_.end()) {
        place_node_[c] = graph_.add_node(Layer::Places, pa);
        ++n_added;
      } else {
        graph_.set_attrs(it->second, pa);
      }
    }

    // refresh place-place edges incident to touched clusters
    auto want = clustering_.edges_of(grid_, live_gvd_, r.touched);
    std::set<std::pair<NodeId, NodeId>> desired;
    for (const auto& [ce, clearance] : want) {
      NodeId a = place_node_.at(ce.first), b = place_node_.at(ce.second);
      auto key = std::minmax(a, b);
      desired.insert({key.first, key.second});
      graph_.add_edge(a, b);
      edge_clearance_[{key.first, key.second}] = clearance;
    }
    for (int c : r.touched) {
      auto it = place_node_.find(c);
      if (it == place_node_.end()) continue;
      NodeId n = it->second;
      for (NodeId nb : graph_.neighbors_in_layer(n, Layer::Places)) {
        auto key = std::minmax(n, nb);
        if (!desired.count({key.first, key.second})) {
          graph_.remove_edge(n, nb);
          edge_clearance_.erase({key.first, key.second});
        }
      }
    }

    connect_to_places(displaced);
    return {n_added, n_removed};
  }

  /// Point objects/agents at their nearest place (single parent).
  void connect_to_places(const std::vector<NodeId>& ids) {
    const auto& places = graph_.nodes_in_layer(Layer::Places);
    if (places.empty()) return;
    for (NodeId n : ids) {
      if (!graph_.nodes().count(n)) continue;
      Vec3 p = node_position(graph_.node(n).attrs);
      NodeId best = kInvalidNode;
      double best_d = std::numeric_limits<double>::infinity();
      for (NodeId pl : places) {
        double d = (node_position(graph_.node(pl).attrs) - p).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = pl;
        }
      }
      for (NodeId old : graph_.neighbors_in_layer(n, Layer::Places))
        if (old != best) graph_.remove_edge(n, old);
      if (best != kInvalidNode) graph_.add_edge(n, best);
    }
  }

  FrontendConfig cfg_;
  VoxelGrid grid_;
  SceneGraph graph_;
  PlaceClustering clustering_;
  std::map<size_t, GvdVoxel> live_gvd_;
  std::map<size_t, NodeId> point_node_;
  std::map<int, NodeId> place_node_;
  std::map<std::pair<NodeId, NodeId>, double> edge_clearance_;
  std::map<NodeId, std::map<int64_t, Vec3>> anchors_;
  std::vector<NodeId> agents_;
};

}  // namespace atrium
