#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "atrium/descriptors.hpp"
#include "atrium/registration.hpp"
#include "atrium/scene_graph.hpp"
#include "atrium/se3.hpp"

namespace atrium {

enum class ClosureSource { AppearanceRegistration, ObjectRegistration };

struct LoopClosure {
  NodeId query = kInvalidNode, match = kInvalidNode;  ///< agent nodes
  Se3 relative_pose;  ///< match keyframe expressed in the query keyframe frame
  int inliers = 0;
  ClosureSource source = ClosureSource::AppearanceRegistration;
};

namespace detail {

/// Lift a map-frame alignment (match map points -> query map points) to the
/// relative pose between the two agent frames.
inline Se3 relative_from_alignment(const Se3& query_pose, const Se3& match_pose,
                                   const Se3& align) {
  return query_pose.inverse() * align * match_pose;
}

}  // namespace detail

/// Geometric verification on shared feature anchors: exact physical points
/// seen from both keyframes, matched by id, registered robustly. Fails when
/// too few features are shared or no rigid consensus exists.
inline std::optional<LoopClosure> register_appearance(
    const SceneGraph& g, NodeId query, NodeId match,
    const std::map<int64_t, Vec3>& query_anchors,
    const std::map<int64_t, Vec3>& match_anchors, const RegistrationParams& p = {}) {
  std::vector<std::pair<Vec3, Vec3>> corr;  // (match point, query point)
  for (const auto& [id, mp] : match_anchors) {
    auto it = query_anchors.find(id);
    if (it != query_anchors.end()) corr.push_back({mp, it->second});
  }
  if (corr.empty()) return std::nullopt;
  RigidFit fit = ransac_rigid(corr, p);
  if (!fit.ok) return std::nullopt;
  LoopClosure lc;
  lc.query = query;
  lc.match = match;
  lc.inliers = static_cast<int>(fit.inliers.size());
  lc.source = ClosureSource::AppearanceRegistration;
  lc.relative_pose = detail::relative_from_alignment(
      std::get<AgentAttrs>(g.node(query).attrs).pose,
      std::get<AgentAttrs>(g.node(match).attrs).pose, fit.transform);
  return lc;
}

/// Geometric verification on object centroids: every same-label pair across
/// the two sub-graphs is a putative correspondence; RANSAC sorts them out.
inline std::optional<LoopClosure> register_objects(const SceneGraph& g,
                                                   const HierarchicalDescriptor& query,
                                                   const HierarchicalDescriptor& match,
                                                   const RegistrationParams& p = {}) {
  if (query.subgraph_object_ids.size() < static_cast<size_t>(p.min_inliers) ||
      match.subgraph_object_ids.size() < static_cast<size_t>(p.min_inliers))
    return std::nullopt;
  std::vector<std::pair<Vec3, Vec3>> corr;  // (match centroid, query centroid)
  for (NodeId mo : match.subgraph_object_ids) {
    const auto* ma = std::get_if<ObjectAttrs>(&g.node(mo).attrs);
    if (!ma) continue;
    for (NodeId qo : query.subgraph_object_ids) {
      const auto* qa = std::get_if<ObjectAttrs>(&g.node(qo).attrs);
      if (qa && qa->label == ma->label) corr.push_back({ma->centroid, qa->centroid});
    }
  }
  RigidFit fit = ransac_rigid(corr, p);
  if (!fit.ok) return std::nullopt;
  LoopClosure lc;
  lc.query = query.agent_node;
  lc.match = match.agent_node;
  lc.inliers = static_cast<int>(fit.inliers.size());
  lc.source = ClosureSource::ObjectRegistration;
  lc.relative_pose = detail::relative_from_alignment(
      std::get<AgentAttrs>(g.node(query.agent_node).attrs).pose,
      std::get<AgentAttrs>(g.node(match.agent_node).attrs).pose, fit.transform);
  return lc;
}

struct LoopClosureConfig {
  DescriptorPolicy descriptor;
  MatchThresholds thresholds;
  RegistrationParams registration;  ///< shared by both verification levels
};

/// Keyframe descriptor database plus the match-then-verify pipeline. One
/// writer (add_keyframe) and readers (detect_batch) must not overlap; the
/// pipeline serializes stages around keyframe boundaries.
class LoopClosureDetector {
 public:
  explicit LoopClosureDetector(const LoopClosureConfig& cfg = {}) : cfg_(cfg) {}

  /// Build and store this keyframe's descriptor. Agents with no parent place
  /// yet are retried on later keyframes.
  void add_keyframe(const SceneGraph& g, NodeId agent,
                    std::map<int64_t, Vec3> anchors) {
    anchors_[agent] = std::move(anchors);
    pending_.push_back(agent);
    std::vector<NodeId> still;
    for (NodeId a : pending_) {
      auto d = build_descriptor(g, a, cfg_.descriptor);
      if (d)
        db_.push_back(std::move(*d));
      else
        still.push_back(a);
    }
    pending_ = std::move(still);
  }

  /// Match and verify every descriptor added since the previous call, against
  /// all sufficiently old database entries. Candidate order: appearance-level
  /// matches first, then by descriptor distance. The first verified candidate
  /// per query wins.
  std::vector<LoopClosure> detect_batch(const SceneGraph& snapshot) {
    std::vector<LoopClosure> out;
    for (size_t qi = next_query_; qi < db_.size(); ++qi) {
      const auto& q = db_[qi];
      auto candidates = match_top_down(q, db_, cfg_.thresholds);
      std::sort(candidates.begin(), candidates.end(),
                [](const LoopClosureCandidate& a, const LoopClosureCandidate& b) {
                  if (a.level != b.level) return a.level == MatchLevel::Appearance;
                  double da = a.appearance_distance + a.object_distance;
                  double db2 = b.appearance_distance + b.object_distance;
                  if (da != db2) return da < db2;
                  return a.match < b.match;
                });
      for (const auto& c : candidates) {
        const HierarchicalDescriptor* m = descriptor_of(c.match);
        if (!m) continue;
        std::optional<LoopClosure> lc;
        if (c.level == MatchLevel::Appearance)
          lc = register_appearance(snapshot, c.query, c.match, anchors_.at(c.query),
                                   anchors_.at(c.match), cfg_.registration);
        if (!lc) lc = register_objects(snapshot, q, *m, cfg_.registration);
        if (lc) {
          out.push_back(*lc);
          break;
        }
      }
    }
    next_query_ = db_.size();
    return out;
  }

  const std::vector<HierarchicalDescriptor>& database() const { return db_; }
  const std::map<NodeId, std::map<int64_t, Vec3>>& anchors() const { return anchors_; }

 private:
  const HierarchicalDescriptor* descriptor_of(NodeId agent) const {
    for (const auto& d : db_)
      if (d.agent_node == agent) return &d;
    return nullptr;
  }

  LoopClosureConfig cfg_;
  std::vector<HierarchicalDescriptor> db_;
  std::map<NodeId, std::map<int64_t, Vec3>> anchors_;
  std::vector<NodeId> pending_;
  size_t next_query_ = 0;
};

}  // namespace atrium
