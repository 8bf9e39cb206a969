#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "atrium/scene_graph.hpp"
#include "atrium/union_find.hpp"

namespace atrium {

/// Undirected graph over arbitrary node ids, used as decomposition input.
class SimpleGraph {
 public:
  SimpleGraph() = default;

  explicit SimpleGraph(std::vector<NodeId> vertices) {
    std::sort(vertices.begin(), vertices.end());
    vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
    labels_ = std::move(vertices);
    for (size_t i = 0; i < labels_.size(); ++i) index_[labels_[i]] = static_cast<int>(i);
    adj_.resize(labels_.size());
  }

  void add_edge(NodeId a, NodeId b) {
    int ia = index(a), ib = index(b);
    if (ia == ib) throw std::invalid_argument("self edge");
    adj_[ia].insert(ib);
    adj_[ib].insert(ia);
  }

  bool has_edge(NodeId a, NodeId b) const {
    return adj_[index(a)].count(index(b)) > 0;
  }

  size_t num_vertices() const { return labels_.size(); }

  size_t num_edges() const {
    size_t twice = 0;
    for (const auto& s : adj_) twice += s.size();
    return twice / 2;
  }

  NodeId label(int idx) const { return labels_[idx]; }
  const std::vector<NodeId>& labels() const { return labels_; }
  const std::set<int>& neighbors_idx(int idx) const { return adj_[idx]; }

  int index(NodeId v) const {
    auto it = index_.find(v);
    if (it == index_.end()) throw std::out_of_range("vertex not in graph: " + std::to_string(v));
    return it->second;
  }

  std::vector<std::pair<NodeId, NodeId>> edge_list() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    for (size_t i = 0; i < adj_.size(); ++i)
      for (int j : adj_[i])
        if (static_cast<int>(i) < j) out.emplace_back(labels_[i], labels_[j]);
    return out;
  }

 private:
  std::vector<NodeId> labels_;
  std::map<NodeId, int> index_;
  std::vector<std::set<int>> adj_;
};

struct Bag {
  std::vector<NodeId> nodes;  // sorted
  size_t size() const { return nodes.size(); }
  bool contains(NodeId v) const {
    return std::binary_search(nodes.begin(), nodes.end(), v);
  }
};

/// Tree decomposition: bags plus tree edges between bag indices.
/// Width is the largest bag size minus one.
struct TreeDecomposition {
  std::vector<Bag> bags;
  std::vector<std::pair<int, int>> tree_edges;

  int width() const {
    size_t m = 0;
    for (const auto& b : bags) m = std::max(m, b.size());
    return static_cast<int>(m) - 1;
  }
};

enum class Heuristic { MinDegree, MinFill };

/// Contracts any bag that is a subset of a tree neighbor into that neighbor.
/// Width and validity are preserved.
inline void prune_subset_bags(TreeDecomposition& td) {
  const int n = static_cast<int>(td.bags.size());
  std::vector<std::set<int>> adj(n);
  for (auto [a, b] : td.tree_edges) {
    adj[a].insert(b);
    adj[b].insert(a);
  }
  std::vector<bool> alive(n, true);
  auto subset = [&](const Bag& small, const Bag& big) {
    return std::includes(big.nodes.begin(), big.nodes.end(),
                         small.nodes.begin(), small.nodes.end());
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (int a = 0; a < n && !changed; ++a) {
      if (!alive[a]) continue;
      for (int b : adj[a]) {
        if (!subset(td.bags[a], td.bags[b])) continue;
        for (int c : adj[a])
          if (c != b) {
            adj[c].erase(a);
            adj[c].insert(b);
            adj[b].insert(c);
          }
        adj[b].erase(a);
        adj[a].clear();
        alive[a] = false;
        changed = true;
        break;
      }
    }
  }
  std::vector<int> remap(n, -1);
  TreeDecomposition out;
  for (int i = 0; i < n; ++i)
    if (alive[i]) {
      remap[i] = static_cast<int>(out.bags.size());
      out.bags.push_back(std::move(td.bags[i]));
    }
  for (int i = 0; i < n; ++i)
    if (alive[i])
      for (int j : adj[i])
        if (i < j) out.tree_edges.emplace_back(remap[i], remap[j]);
  td = std::move(out);
}

namespace detail {

inline int fill_count(const std::vector<std::set<int>>& adj, int v) {
  int fill = 0;
  const auto& nb = adj[v];
  for (auto it = nb.begin(); it != nb.end(); ++it) {
    auto jt = it;
    for (++jt; jt != nb.end(); ++jt)
      if (!adj[*it].count(*jt)) ++fill;
  }
  return fill;
}

}  // namespace detail

/// Elimination-ordering decomposition. Ties between candidate vertices go to
/// the lowest node id. Full graphs collapse to one bag per vertex chain; a
/// disconnected input still yields a single tree (component roots chained).
inline TreeDecomposition td_heuristic(const SimpleGraph& g, Heuristic h) {
  const int n = static_cast<int>(g.num_vertices());
  TreeDecomposition td;
  if (n == 0) {
    td.bags.push_back({});
    return td;
  }

  std::vector<std::set<int>> adj(n);
  for (int v = 0; v < n; ++v) adj[v] = g.neighbors_idx(v);

  std::vector<bool> gone(n, false);
  std::vector<int> pos(n, -1);
  std::vector<std::vector<int>> bag_idx(n);
  std::vector<int> order;
  order.reserve(n);

  for (int step = 0; step < n; ++step) {
    int best = -1;
    long best_score = 0;
    for (int v = 0; v < n; ++v) {
      if (gone[v]) continue;
      long score = (h == Heuristic::MinDegree)
                       ? static_cast<long>(adj[v].size())
                       : detail::fill_count(adj, v);
      if (best < 0 || score < best_score) {
        best = v;
        best_score = score;
      }
    }
    pos[best] = step;
    order.push_back(best);
    bag_idx[step].push_back(best);
    for (int u : adj[best]) bag_idx[step].push_back(u);
    for (auto it = adj[best].begin(); it != adj[best].end(); ++it) {
      auto jt = it;
      for (++jt; jt != adj[best].end(); ++jt) {
        adj[*it].insert(*jt);
        adj[*jt].insert(*it);
      }
    }
    for (int u : adj[best]) adj[u].erase(best);
    adj[best].clear();
    gone[best] = true;
  }

  td.bags.resize(n);
  std::vector<int> roots;
  for (int k = 0; k < n; ++k) {
    for (int v : bag_idx[k]) td.bags[k].nodes.push_back(g.label(v));
    std::sort(td.bags[k].nodes.begin(), td.bags[k].nodes.end());
    int next = -1;
    for (size_t i = 1; i < bag_idx[k].size(); ++i) {
      int p = pos[bag_idx[k][i]];
      if (next < 0 || p < next) next = p;
    }
    if (next >= 0)
      td.tree_edges.emplace_back(k, next);
    else
      roots.push_back(k);
  }
  for (size_t i = 1; i < roots.size(); ++i)
    td.tree_edges.emplace_back(roots[i - 1], roots[i]);
  prune_subset_bags(td);
  return td;
}

struct TdViolation {
  enum class Kind { NotATree, UnknownNode, EdgeNotCovered, NotConnected, NodeMissing };
  Kind kind;
  std::string detail;
};

/// Checks the five decomposition conditions against the graph: the bag graph
/// is a tree, bags draw from the vertex set, every edge lies in some bag,
/// each vertex's bags form a connected subtree, and every vertex appears.
inline std::vector<TdViolation> validate_td(const SimpleGraph& g,
                                            const TreeDecomposition& td) {
  std::vector<TdViolation> out;
  const int nb = static_cast<int>(td.bags.size());

  if (nb == 0) {
    out.push_back({TdViolation::Kind::NotATree, "decomposition has no bags"});
    return out;
  }
  UnionFind uf(nb);
  bool tree_ok = static_cast<int>(td.tree_edges.size()) == nb - 1;
  for (auto [a, b] : td.tree_edges) {
    if (a < 0 || b < 0 || a >= nb || b >= nb) {
      out.push_back({TdViolation::Kind::NotATree, "tree edge out of range"});
      return out;
    }
    if (!uf.unite(a, b)) tree_ok = false;  // cycle
  }
  if (uf.num_components() != 1) tree_ok = false;
  if (!tree_ok)
    out.push_back({TdViolation::Kind::NotATree,
                   "bag graph is not a single tree (" + std::to_string(nb) +
                       " bags, " + std::to_string(td.tree_edges.size()) + " edges)"});

  std::set<NodeId> vertex_set(g.labels().begin(), g.labels().end());
  std::set<NodeId> covered;
  for (const auto& bag : td.bags)
    for (NodeId v : bag.nodes) {
      covered.insert(v);
      if (!vertex_set.count(v))
        out.push_back({TdViolation::Kind::UnknownNode,
                       "bag contains node " + std::to_string(v) + " not in graph"});
    }
  for (NodeId v : vertex_set)
    if (!covered.count(v))
      out.push_back({TdViolation::Kind::NodeMissing,
                     "node " + std::to_string(v) + " is in no bag"});

  for (auto [a, b] : g.edge_list()) {
    bool found = false;
    for (const auto& bag : td.bags)
      if (bag.contains(a) && bag.contains(b)) {
        found = true;
        break;
      }
    if (!found)
      out.push_back({TdViolation::Kind::EdgeNotCovered,
                     "edge (" + std::to_string(a) + "," + std::to_string(b) +
                         ") not inside any bag"});
  }

  std::vector<std::vector<int>> bag_adj(nb);
  for (auto [a, b] : td.tree_edges) {
    bag_adj[a].push_back(b);
    bag_adj[b].push_back(a);
  }
  for (NodeId v : vertex_set) {
    std::vector<int> holding;
    for (int k = 0; k < nb; ++k)
      if (td.bags[k].contains(v)) holding.push_back(k);
    if (holding.size() <= 1) continue;
    std::set<int> in_set(holding.begin(), holding.end());
    std::set<int> seen{holding[0]};
    std::vector<int> stack{holding[0]};
    while (!stack.empty()) {
      int cur = stack.back();
      stack.pop_back();
      for (int nxt : bag_adj[cur])
        if (in_set.count(nxt) && seen.insert(nxt).second) stack.push_back(nxt);
    }
    if (seen.size() != in_set.size())
      out.push_back({TdViolation::Kind::NotConnected,
                     "bags holding node " + std::to_string(v) +
                         " do not form a connected subtree"});
  }
  return out;
}

/// Smallest width over both elimination heuristics.
inline int treewidth_upper_bound(const SimpleGraph& g) {
  return std::min(td_heuristic(g, Heuristic::MinDegree).width(),
                  td_heuristic(g, Heuristic::MinFill).width());
}

}  // namespace atrium
