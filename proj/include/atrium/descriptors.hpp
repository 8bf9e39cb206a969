#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "atrium/geometry.hpp"
#include "atrium/scene_graph.hpp"

namespace atrium {

/// Per-keyframe summary of the agent's surroundings, one histogram per level:
/// visual appearance (landmark bag), object semantics, place clearances.
struct HierarchicalDescriptor {
  NodeId agent_node = kInvalidNode;
  int64_t keyframe = 0;
  Vec3 center = Vec3::Zero();  ///< parent place position the radius grew from
  std::map<int64_t, double> appearance;  ///< normalized landmark bag
  std::map<int, double> object_hist;     ///< normalized label histogram
  Eigen::VectorXd place_hist;            ///< normalized clearance histogram
  std::set<NodeId> subgraph_object_ids, subgraph_place_ids;
  Aabb subgraph_bbox;  ///< over sub-graph node positions at build time
};

struct DescriptorPolicy {
  double radius_min = 3.0, radius_max = 5.0, radius_step = 0.5;
  int min_nodes = 10;
  double place_bin_width = 0.25;
  double place_bin_limit = 5.0;
};

/// L1 distance between sparse histograms (missing keys count as zero).
template <typename K>
double l1_distance(const std::map<K, double>& a, const std::map<K, double>& b) {
  double d = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first))
      d += std::abs((ia++)->second);
    else if (ia == a.end() || ib->first < ia->first)
      d += std::abs((ib++)->second);
    else {
      d += std::abs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  return d;
}

inline double l1_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() == 0 && b.size() == 0) return 0.0;
  if (a.size() == 0) return b.cwiseAbs().sum();
  if (b.size() == 0) return a.cwiseAbs().sum();
  return (a - b).cwiseAbs().sum();
}

/// Build the descriptor for an agent keyframe. The sub-graph is every object
/// and place within a radius of the agent's parent place, growing the radius
/// until enough nodes are inside or the cap is reached. Returns nothing when
/// the agent has no parent place yet (caller defers).
inline std::optional<HierarchicalDescriptor> build_descriptor(
    const SceneGraph& g, NodeId agent, const DescriptorPolicy& policy = {}) {
  auto places = g.neighbors_in_layer(agent, Layer::Places);
  if (places.empty()) return std::nullopt;

  HierarchicalDescriptor d;
  d.agent_node = agent;
  const auto& aa = std::get<AgentAttrs>(g.node(agent).attrs);
  d.keyframe = aa.keyframe;
  d.appearance = aa.appearance;
  d.center = node_position(g.node(places.front()).attrs);

  double r = policy.radius_min;
  for (;; r += policy.radius_step) {
    d.subgraph_object_ids.clear();
    d.subgraph_place_ids.clear();
    for (NodeId n : g.nodes_in_layer(Layer::Places))
      if ((node_position(g.node(n).attrs) - d.center).norm() <= r)
        d.subgraph_place_ids.insert(n);
    for (NodeId n : g.nodes_in_layer(Layer::ObjectsAgents)) {
      const auto* oa = std::get_if<ObjectAttrs>(&g.node(n).attrs);
      if (oa && (oa->centroid - d.center).norm() <= r) d.subgraph_object_ids.insert(n);
    }
    size_t total = d.subgraph_object_ids.size() + d.subgraph_place_ids.size();
    if (total >= static_cast<size_t>(policy.min_nodes) ||
        r + policy.radius_step > policy.radius_max + 1e-12)
      break;
  }

  int bins = static_cast<int>(std::ceil(policy.place_bin_limit / policy.place_bin_width));
  d.place_hist = Eigen::VectorXd::Zero(bins);
  for (NodeId n : d.subgraph_place_ids) {
    const auto& pa = std::get<PlaceAttrs>(g.node(n).attrs);
    int b = std::min(bins - 1,
                     static_cast<int>(std::floor(pa.distance / policy.place_bin_width)));
    d.place_hist[std::max(0, b)] += 1.0;
    d.subgraph_bbox.expand(pa.position);
  }
  if (d.place_hist.sum() > 0) d.place_hist /= d.place_hist.sum();

  double total_obj = 0;
  for (NodeId n : d.subgraph_object_ids) {
    const auto& oa = std::get<ObjectAttrs>(g.node(n).attrs);
    d.object_hist[oa.label] += 1.0;
    total_obj += 1.0;
    d.subgraph_bbox.expand(oa.centroid);
  }
  if (total_obj > 0)
    for (auto& [l, w] : d.object_hist) w /= total_obj;
  return d;
}

enum class MatchLevel { Object, Appearance };

struct LoopClosureCandidate {
  NodeId query = kInvalidNode, match = kInvalidNode;
  MatchLevel level = MatchLevel::Object;
  double place_distance = 0.0, object_distance = 0.0, appearance_distance = 0.0;
};

struct MatchThresholds {
  double tau_place = 0.5;
  double tau_object = 0.3;
  double tau_agent = 0.01;
  int64_t temporal_mask = 10;  ///< keyframes around the query excluded
};

/// Walk the descriptor hierarchy top-down: places gate, then objects, then
/// appearance; a candidate is emitted at the deepest level that passes.
inline std::vector<LoopClosureCandidate> match_top_down(
    const HierarchicalDescriptor& q, const std::vector<HierarchicalDescriptor>& db,
    const MatchThresholds& t) {
  std::vector<LoopClosureCandidate> out;
  for (const auto& m : db) {
    if (q.keyframe - m.keyframe <= t.temporal_mask) continue;
    double dp = l1_distance(q.place_hist, m.place_hist);
    if (dp > t.tau_place) continue;
    double dob = l1_distance(q.object_hist, m.object_hist);
    if (dob > t.tau_object) continue;
    double da = l1_distance(q.appearance, m.appearance);
    LoopClosureCandidate c;
    c.query = q.agent_node;
    c.match = m.agent_node;
    c.place_distance = dp;
    c.object_distance = dob;
    c.appearance_distance = da;
    c.level = da <= t.tau_agent ? MatchLevel::Appearance : MatchLevel::Object;
    out.push_back(c);
  }
  return out;
}

}  // namespace atrium
