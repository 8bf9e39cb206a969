#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "atrium/scene_graph.hpp"
#include "atrium/tree_decomposition.hpp"

namespace atrium {

/// Layered undirected graph with its own contiguous rank numbering, the input
/// shape for hierarchical decomposition. Ranks start at 1.
class HierGraph {
 public:
  void add_node(NodeId id, int rank) {
    if (rank < 1) throw std::invalid_argument("rank must be >= 1");
    if (!rank_.emplace(id, rank).second)
      throw std::invalid_argument("duplicate node " + std::to_string(id));
    adj_[id];
    ranks_[rank].insert(id);
  }

  void add_edge(NodeId a, NodeId b) {
    if (a == b) throw std::invalid_argument("self edge");
    rank_of(a);
    rank_of(b);
    adj_[a].insert(b);
    adj_[b].insert(a);
  }

  int rank_of(NodeId v) const {
    auto it = rank_.find(v);
    if (it == rank_.end()) throw std::out_of_range("no node " + std::to_string(v));
    return it->second;
  }

  bool has_node(NodeId v) const { return rank_.count(v) > 0; }
  const std::set<NodeId>& neighbors(NodeId v) const { return adj_.at(v); }
  const std::map<NodeId, int>& nodes() const { return rank_; }
  size_t num_nodes() const { return rank_.size(); }

  int max_rank() const {
    int top = 0;
    for (const auto& [r, ids] : ranks_)
      if (!ids.empty()) top = std::max(top, r);
    return top;
  }

  std::vector<NodeId> nodes_at_rank(int rank) const {
    auto it = ranks_.find(rank);
    if (it == ranks_.end()) return {};
    return {it->second.begin(), it->second.end()};
  }

  std::vector<NodeId> children(NodeId v) const {
    int below = rank_of(v) - 1;
    std::vector<NodeId> out;
    for (NodeId nb : adj_.at(v))
      if (rank_of(nb) == below) out.push_back(nb);
    return out;
  }

  std::optional<NodeId> parent(NodeId v) const {
    int above = rank_of(v) + 1;
    for (NodeId nb : adj_.at(v))
      if (rank_of(nb) == above) return nb;
    return std::nullopt;
  }

  std::vector<std::pair<NodeId, NodeId>> edge_list() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    for (const auto& [v, nbs] : adj_)
      for (NodeId nb : nbs)
        if (v < nb) out.emplace_back(v, nb);
    return out;
  }

  SimpleGraph induced(const std::vector<NodeId>& vertices) const {
    SimpleGraph g(vertices);
    std::set<NodeId> keep(vertices.begin(), vertices.end());
    for (NodeId v : keep)
      for (NodeId nb : adj_.at(v))
        if (v < nb && keep.count(nb)) g.add_edge(v, nb);
    return g;
  }

  /// Single parent, locality, and disjoint children, as for the scene graph.
  HierarchyReport validate() const {
    HierarchyReport report;
    for (const auto& [v, r] : rank_) {
      int parents = 0;
      NodeId second = 0;
      for (NodeId nb : adj_.at(v)) {
        int dr = rank_of(nb) - r;
        if (dr > 1 || dr < -1) {
          if (v < nb)
            report.violations.push_back({HierarchyViolation::Kind::Locality, v,
                                         nb, "edge spans non-adjacent ranks"});
          continue;
        }
        if (dr == 1 && ++parents > 1) second = nb;
      }
      if (parents > 1)
        report.violations.push_back(
            {HierarchyViolation::Kind::MultipleParents, v, second,
             std::to_string(parents) + " parents for node " + std::to_string(v)});
    }
    for (const auto& [a, b] : edge_list()) {
      if (rank_of(a) != rank_of(b)) continue;
      auto pa = parent(a);
      auto pb = parent(b);
      if (pa && pb && *pa != *pb)
        report.violations.push_back(
            {HierarchyViolation::Kind::SharedChildEdge, a, b,
             "intra-rank edge joins children of different parents"});
    }
    return report;
  }

 private:
  std::map<NodeId, int> rank_;
  std::map<NodeId, std::set<NodeId>> adj_;
  std::map<int, std::set<NodeId>> ranks_;
};

class HierarchyError : public std::runtime_error {
 public:
  HierarchyError(std::string msg, HierarchyReport rep)
      : std::runtime_error(std::move(msg)), report(std::move(rep)) {}
  HierarchyReport report;
};

class OrphanNodeError : public std::runtime_error {
 public:
  OrphanNodeError(std::string msg, std::vector<NodeId> ids)
      : std::runtime_error(std::move(msg)), orphans(std::move(ids)) {}
  std::vector<NodeId> orphans;
};

/// Layer-by-layer tree decomposition. The top rank is decomposed directly;
/// walking down, each parent's child set is decomposed on its own, the parent
/// is added to every resulting bag, and the sub-tree is grafted onto the
/// lowest-id bag already holding the parent. Every node below the top rank
/// must have a parent.
inline TreeDecomposition td_hierarchical(const HierGraph& g, Heuristic h) {
  auto report = g.validate();
  if (!report.ok())
    throw HierarchyError("hierarchy violations: " +
                             std::to_string(report.violations.size()),
                         std::move(report));

  TreeDecomposition td;
  if (g.num_nodes() == 0) {
    td.bags.push_back({});
    return td;
  }
  int top = g.max_rank();
  std::vector<NodeId> orphans;
  for (const auto& [v, r] : g.nodes())
    if (r < top && !g.parent(v)) orphans.push_back(v);
  if (!orphans.empty())
    throw OrphanNodeError("nodes below the top rank lack parents (" +
                              std::to_string(orphans.size()) + " found)",
                          std::move(orphans));

  td = td_heuristic(g.induced(g.nodes_at_rank(top)), h);

  for (int rank = top; rank >= 2; --rank) {
    for (NodeId v : g.nodes_at_rank(rank)) {
      std::vector<NodeId> kids = g.children(v);
      if (kids.empty()) continue;
      std::sort(kids.begin(), kids.end());
      TreeDecomposition sub = td_heuristic(g.induced(kids), h);

      int graft = -1;
      for (size_t k = 0; k < td.bags.size(); ++k)
        if (td.bags[k].contains(v)) {
          graft = static_cast<int>(k);
          break;
        }
      if (graft < 0)
        throw std::logic_error("parent node missing from running decomposition");

      int offset = static_cast<int>(td.bags.size());
      for (auto& bag : sub.bags) {
        bag.nodes.insert(
            std::lower_bound(bag.nodes.begin(), bag.nodes.end(), v), v);
        td.bags.push_back(std::move(bag));
      }
      for (auto [a, b] : sub.tree_edges)
        td.tree_edges.emplace_back(a + offset, b + offset);
      td.tree_edges.emplace_back(graft, offset);
    }
  }
  return td;
}

/// Width bound implied by the layer-wise construction: the largest child-set
/// decomposition width plus one, or the top-rank width, whichever is larger.
inline int layered_width_bound(const HierGraph& g, Heuristic h) {
  int top = g.max_rank();
  int bound = td_heuristic(g.induced(g.nodes_at_rank(top)), h).width();
  for (int rank = top; rank >= 2; --rank)
    for (NodeId v : g.nodes_at_rank(rank)) {
      auto kids = g.children(v);
      if (kids.empty()) continue;
      bound = std::max(bound, td_heuristic(g.induced(kids), h).width() + 1);
    }
  return bound;
}

inline SimpleGraph simple_from_hier(const HierGraph& g) {
  std::vector<NodeId> ids;
  for (const auto& [v, r] : g.nodes()) ids.push_back(v);
  SimpleGraph out(ids);
  for (auto [a, b] : g.edge_list()) out.add_edge(a, b);
  return out;
}

/// Projects contiguous scene-graph layers onto ranks 1..k.
inline HierGraph hier_from_scene_graph(const SceneGraph& g,
                                       const std::vector<Layer>& layers) {
  if (layers.empty()) throw std::invalid_argument("no layers given");
  for (size_t i = 1; i < layers.size(); ++i)
    if (layer_index(layers[i]) != layer_index(layers[i - 1]) + 1)
      throw std::invalid_argument("layers must be contiguous and ascending");
  HierGraph out;
  std::map<Layer, int> rank;
  for (size_t i = 0; i < layers.size(); ++i) rank[layers[i]] = static_cast<int>(i) + 1;
  for (Layer l : layers)
    for (NodeId v : g.nodes_in_layer(l)) out.add_node(v, rank[l]);
  for (auto [a, b] : g.edges()) {
    if (!out.has_node(a) || !out.has_node(b)) continue;
    out.add_edge(a, b);
  }
  return out;
}

/// Collapses places out of a scene graph: objects attach to the room of their
/// nearest place, rooms keep their building edge, object-object scene edges
/// survive when both ends land in the same room. Objects without a room (and
/// agents) are left out.
inline HierGraph extract_object_room_graph(const SceneGraph& g) {
  HierGraph out;
  std::map<NodeId, NodeId> room_of;
  for (NodeId obj : g.nodes_in_layer(Layer::ObjectsAgents)) {
    if (!std::holds_alternative<ObjectAttrs>(g.node(obj).attrs)) continue;
    for (NodeId pl : g.neighbors_in_layer(obj, Layer::Places)) {
      if (auto room = g.parent(pl)) {
        room_of[obj] = *room;
        break;
      }
    }
  }
  for (NodeId b : g.nodes_in_layer(Layer::Building)) out.add_node(b, 3);
  for (NodeId r : g.nodes_in_layer(Layer::Rooms)) out.add_node(r, 2);
  for (const auto& [obj, room] : room_of) {
    out.add_node(obj, 1);
    out.add_edge(obj, room);
  }
  for (NodeId r : g.nodes_in_layer(Layer::Rooms)) {
    for (NodeId nb : g.neighbors_in_layer(r, Layer::Building)) out.add_edge(r, nb);
    for (NodeId nb : g.neighbors_in_layer(r, Layer::Rooms))
      if (r < nb) out.add_edge(r, nb);
  }
  for (const auto& [obj, room] : room_of)
    for (NodeId nb : g.neighbors_in_layer(obj, Layer::ObjectsAgents)) {
      auto it = room_of.find(nb);
      if (obj < nb && it != room_of.end() && it->second == room)
        out.add_edge(obj, nb);
    }
  return out;
}

}  // namespace atrium
