#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "atrium/hierarchical_td.hpp"
#include "atrium/tree_decomposition.hpp"

namespace atrium {

struct HTreeNode {
  enum class Kind { Clique, Leaf };
  int id = 0;
  Kind kind = Kind::Clique;
  std::vector<NodeId> members;  // sorted; exactly one entry for leaves
};

/// Tree of clique nodes (decomposition bags, refined) with singleton leaves.
struct HTree {
  std::vector<HTreeNode> nodes;
  std::vector<std::pair<int, int>> edges;
  std::map<NodeId, std::vector<int>> leaf_map;  // input node -> leaf ids
};

namespace detail {

/// Refines one bag: single-rank contents are decomposed directly, contents of
/// the form children-plus-parent go through the layered construction.
inline TreeDecomposition decompose_bag(const HierGraph& g,
                                       const std::vector<NodeId>& members,
                                       Heuristic h) {
  int top = 0;
  for (NodeId v : members) top = std::max(top, g.rank_of(v));
  std::vector<NodeId> uppers;
  for (NodeId v : members)
    if (g.rank_of(v) == top) uppers.push_back(v);

  if (uppers.size() == 1 && uppers.size() < members.size()) {
    HierGraph sub;
    for (NodeId v : members) sub.add_node(v, v == uppers[0] ? 2 : 1);
    SimpleGraph induced = g.induced(members);
    for (auto [a, b] : induced.edge_list()) sub.add_edge(a, b);
    TreeDecomposition td = td_hierarchical(sub, h);
    prune_subset_bags(td);
    return td;
  }
  return td_heuristic(g.induced(members), h);
}

}  // namespace detail

/// Expands the layered decomposition of a hierarchical graph into an H-tree:
/// every bag becomes a clique node, bags with more than one member are
/// refined by a further decomposition, and each member hangs off the
/// refinement as a singleton leaf.
inline HTree build_htree(const HierGraph& g, Heuristic h = Heuristic::MinDegree) {
  HTree out;
  if (g.num_nodes() == 0) return out;

  TreeDecomposition td = td_hierarchical(g, h);
  prune_subset_bags(td);

  for (size_t k = 0; k < td.bags.size(); ++k)
    out.nodes.push_back({static_cast<int>(k), HTreeNode::Kind::Clique,
                         td.bags[k].nodes});
  for (auto [a, b] : td.tree_edges) out.edges.emplace_back(a, b);

  auto add_leaf = [&](NodeId member, int under) {
    int id = static_cast<int>(out.nodes.size());
    out.nodes.push_back({id, HTreeNode::Kind::Leaf, {member}});
    out.edges.emplace_back(under, id);
    out.leaf_map[member].push_back(id);
  };

  for (size_t k = 0; k < td.bags.size(); ++k) {
    const auto& members = td.bags[k].nodes;
    if (members.size() == 1) {
      add_leaf(members[0], static_cast<int>(k));
      continue;
    }
    TreeDecomposition sub = detail::decompose_bag(g, members, h);
    if (sub.bags.size() <= 1) {
      for (NodeId m : members) add_leaf(m, static_cast<int>(k));
      continue;
    }
    int offset = static_cast<int>(out.nodes.size());
    for (const auto& bag : sub.bags)
      out.nodes.push_back({static_cast<int>(out.nodes.size()),
                           HTreeNode::Kind::Clique, bag.nodes});
    for (auto [a, b] : sub.tree_edges)
      out.edges.emplace_back(a + offset, b + offset);
    out.edges.emplace_back(static_cast<int>(k), offset);
    for (NodeId m : members) {
      for (size_t s = 0; s < sub.bags.size(); ++s)
        if (sub.bags[s].contains(m)) {
          add_leaf(m, offset + static_cast<int>(s));
          break;
        }
    }
  }
  return out;
}

}  // namespace atrium
