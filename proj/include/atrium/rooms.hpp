#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "atrium/scene_graph.hpp"
#include "atrium/union_find.hpp"

namespace atrium {

/// Places subgraph with clearances, the input to room segmentation. Edge
/// values are effective: an edge never outlives its endpoints.
struct PlacesView {
  std::map<NodeId, std::pair<Vec3, double>> nodes;  ///< position, clearance
  std::map<std::pair<NodeId, NodeId>, double> edges;  ///< canonical pair -> clearance
};

/// Pull the place layer out of a graph. When per-edge clearances are known
/// (the frontend tracks them) pass them in; otherwise an edge inherits the
/// smaller endpoint clearance.
inline PlacesView places_view(
    const SceneGraph& g,
    const std::map<std::pair<NodeId, NodeId>, double>* clearance = nullptr) {
  PlacesView v;
  for (NodeId n : g.nodes_in_layer(Layer::Places)) {
    const auto& a = std::get<PlaceAttrs>(g.node(n).attrs);
    v.nodes[n] = {a.position, a.distance};
  }
  for (auto [a, b] : g.edges()) {
    if (!v.nodes.count(a) || !v.nodes.count(b)) continue;
    double d = std::min(v.nodes.at(a).second, v.nodes.at(b).second);
    if (clearance) {
      auto it = clearance->find({a, b});
      if (it != clearance->end()) d = std::min(d, it->second);
    }
    v.edges[{a, b}] = d;
  }
  return v;
}

/// Betti-0 curve of the dilation filtration: at dilation δ the subgraph keeps
/// nodes and edges with clearance >= δ, and β₀(δ) counts its connected
/// components, ignoring components smaller than min_component_size.
struct Filtration {
  std::vector<double> thresholds;  ///< ascending, clamped to the window
  std::map<double, int> betti0;
  std::map<double, std::vector<std::set<NodeId>>> components;
  int min_component_size = 1;
};

/// One union-find pass over descending thresholds; nodes and edges activate
/// as δ drops below their clearance.
inline Filtration compute_betti_curve(const PlacesView& v, double d_lo, double d_hi,
                                      int min_component_size = 15) {
  if (d_hi < d_lo) throw std::invalid_argument("dilation window is inverted");
  Filtration out;
  out.min_component_size = min_component_size;

  std::set<double> ts;
  auto clamp = [&](double d) { return std::min(std::max(d, d_lo), d_hi); };
  for (const auto& [n, pd] : v.nodes) ts.insert(clamp(pd.second));
  for (const auto& [e, d] : v.edges) ts.insert(clamp(d));
  if (ts.empty()) return out;
  out.thresholds.assign(ts.begin(), ts.end());

  std::vector<NodeId> ids;
  std::map<NodeId, int> idx;
  for (const auto& [n, pd] : v.nodes) {
    idx[n] = static_cast<int>(ids.size());
    ids.push_back(n);
  }
  struct EdgeItem {
    double d;
    NodeId a, b;
  };
  std::vector<EdgeItem> edges;
  for (const auto& [e, d] : v.edges) edges.push_back({d, e.first, e.second});
  std::sort(edges.begin(), edges.end(), [](const EdgeItem& x, const EdgeItem& y) {
    if (x.d != y.d) return x.d > y.d;
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  std::vector<std::pair<double, NodeId>> node_items;
  for (const auto& [n, pd] : v.nodes) node_items.push_back({pd.second, n});
  std::sort(node_items.begin(), node_items.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second < y.second;
  });

  UnionFind uf(ids.size());
  std::vector<bool> active(ids.size(), false);
  size_t next_node = 0, next_edge = 0;
  for (auto it = out.thresholds.rbegin(); it != out.thresholds.rend(); ++it) {
    double delta = *it;
    while (next_node < node_items.size() && node_items[next_node].first >= delta)
      active[idx.at(node_items[next_node++].second)] = true;
    while (next_edge < edges.size() && edges[next_edge].d >= delta) {
      uf.unite(idx.at(edges[next_edge].a), idx.at(edges[next_edge].b));
      ++next_edge;
    }
    std::map<int, std::set<NodeId>> comps;
    for (size_t i = 0; i < ids.size(); ++i)
      if (active[i]) comps[uf.find(static_cast<int>(i))].insert(ids[i]);
    std::vector<std::set<NodeId>> kept;
    for (auto& [root, members] : comps)
      if (static_cast<int>(members.size()) >= min_component_size)
        kept.push_back(std::move(members));
    out.betti0[delta] = static_cast<int>(kept.size());
    out.components[delta] = std::move(kept);
  }
  return out;
}

/// Maximal runs of equal nonzero β₀ over the discrete threshold list.
struct PersistenceInterval {
  int betti = 0;
  double d_min = 0.0, d_max = 0.0;
  double length() const { return d_max - d_min; }
};

inline std::vector<PersistenceInterval> persistence_intervals(const Filtration& f) {
  std::vector<PersistenceInterval> out;
  for (size_t i = 0; i < f.thresholds.size();) {
    int b = f.betti0.at(f.thresholds[i]);
    size_t j = i;
    while (j + 1 < f.thresholds.size() && f.betti0.at(f.thresholds[j + 1]) == b) ++j;
    if (b > 0) out.push_back({b, f.thresholds[i], f.thresholds[j]});
    i = j + 1;
  }
  return out;
}

class RoomSegmentationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DilationChoice {
  double delta_star = 0.0;
  PersistenceInterval interval;
  std::vector<std::set<NodeId>> seeds;
};

/// Among intervals at least α times as long as the longest, take the one with
/// the most components (ties: longer, then smaller d_min); δ* is its lower
/// extreme and the components there become the room seeds.
inline DilationChoice select_dilation(const Filtration& f, double alpha = 0.5) {
  auto intervals = persistence_intervals(f);
  if (intervals.empty())
    throw RoomSegmentationError("no persistent components in the dilation window");
  double max_len = 0.0;
  for (const auto& iv : intervals) max_len = std::max(max_len, iv.length());
  const PersistenceInterval* best = nullptr;
  for (const auto& iv : intervals) {
    if (iv.length() < alpha * max_len) continue;
    if (!best || iv.betti > best->betti ||
        (iv.betti == best->betti && iv.length() > best->length()) ||
        (iv.betti == best->betti && iv.length() == best->length() &&
         iv.d_min < best->d_min))
      best = &iv;
  }
  DilationChoice out;
  out.interval = *best;
  out.delta_star = best->d_min;
  out.seeds = f.components.at(best->d_min);
  return out;
}

struct RoomAssignment {
  std::map<NodeId, int> room_of;
  std::vector<NodeId> unassigned;
  int num_rooms = 0;
};

/// Multi-source flood fill over the full places graph, widest edges first, so
/// partitions split at clearance bottlenecks. Places with no path to a seed
/// stay unassigned.
inline RoomAssignment flood_fill_assign(const PlacesView& v,
                                        const std::vector<std::set<NodeId>>& seeds) {
  RoomAssignment out;
  out.num_rooms = static_cast<int>(seeds.size());
  std::map<NodeId, std::vector<std::pair<NodeId, double>>> adj;
  for (const auto& [e, d] : v.edges) {
    adj[e.first].push_back({e.second, d});
    adj[e.second].push_back({e.first, d});
  }

  // (clearance, -target, room): widest first, then lowest target id
  using Item = std::tuple<double, int64_t, int>;
  std::priority_queue<Item> q;
  auto push_from = [&](NodeId n, int room) {
    auto it = adj.find(n);
    if (it == adj.end()) return;
    for (const auto& [to, d] : it->second)
      if (!out.room_of.count(to)) q.push({d, -static_cast<int64_t>(to), room});
  };
  for (size_t r = 0; r < seeds.size(); ++r)
    for (NodeId n : seeds[r]) out.room_of[n] = static_cast<int>(r);
  for (size_t r = 0; r < seeds.size(); ++r)
    for (NodeId n : seeds[r]) push_from(n, static_cast<int>(r));

  while (!q.empty()) {
    auto [d, neg, room] = q.top();
    q.pop();
    NodeId n = static_cast<NodeId>(-neg);
    if (out.room_of.count(n)) continue;
    out.room_of[n] = room;
    push_from(n, room);
  }
  for (const auto& [n, pd] : v.nodes)
    if (!out.room_of.count(n)) out.unassigned.push_back(n);
  return out;
}

struct RoomLayerResult {
  std::map<int, NodeId> rooms;  ///< room index -> node
  NodeId building = kInvalidNode;
  std::vector<NodeId> unassigned_places;
};

/// Replace the room and building layers according to an assignment: a room
/// per index (centroid = mean member position), room-room edges where member
/// places touch across rooms, and one building over all rooms.
inline RoomLayerResult build_room_layer(SceneGraph& g, const RoomAssignment& a) {
  if (a.room_of.empty()) throw std::invalid_argument("empty room assignment");
  for (NodeId n : std::vector<NodeId>(g.nodes_in_layer(Layer::Building).begin(),
                                      g.nodes_in_layer(Layer::Building).end()))
    g.remove_node(n);
  for (NodeId n : std::vector<NodeId>(g.nodes_in_layer(Layer::Rooms).begin(),
                                      g.nodes_in_layer(Layer::Rooms).end()))
    g.remove_node(n);

  RoomLayerResult out;
  out.unassigned_places = a.unassigned;
  std::map<int, std::vector<NodeId>> members;
  for (const auto& [n, r] : a.room_of) members[r].push_back(n);

  for (const auto& [r, places] : members) {
    Vec3 c = Vec3::Zero();
    for (NodeId n : places) c += node_position(g.node(n).attrs);
    c /= double(places.size());
    out.rooms[r] = g.add_node(Layer::Rooms, RoomAttrs{c});
    for (NodeId n : places) g.add_edge(n, out.rooms[r]);
  }
  for (auto [x, y] : g.edges()) {
    if (g.node(x).layer != Layer::Places || g.node(y).layer != Layer::Places) continue;
    auto ix = a.room_of.find(x);
    auto iy = a.room_of.find(y);
    if (ix == a.room_of.end() || iy == a.room_of.end() || ix->second == iy->second)
      continue;
    g.add_edge(out.rooms.at(ix->second), out.rooms.at(iy->second));
  }

  Vec3 bc = Vec3::Zero();
  for (const auto& [r, n] : out.rooms) bc += node_position(g.node(n).attrs);
  bc /= double(out.rooms.size());
  out.building = g.add_node(Layer::Building, BuildingAttrs{bc});
  for (const auto& [r, n] : out.rooms) g.add_edge(n, out.building);
  return out;
}

struct RoomSegmentationParams {
  double d_lo = 0.5, d_hi = 1.2;
  double alpha = 0.5;
  int min_component_size = 15;
  bool fallback_single_room = true;  ///< degenerate curve -> one room over all places
};

struct RoomSegmentationReport {
  double delta_star = 0.0;
  int betti = 0;
  int num_rooms = 0;
  size_t unassigned_places = 0;
  bool fell_back = false;
};

/// Full segmentation pass over a graph's place layer.
inline RoomSegmentationReport segment_rooms(
    SceneGraph& g, const RoomSegmentationParams& p = {},
    const std::map<std::pair<NodeId, NodeId>, double>* clearance = nullptr) {
  PlacesView v = places_view(g, clearance);
  RoomSegmentationReport rep;
  if (v.nodes.empty()) return rep;
  RoomAssignment assign;
  try {
    auto f = compute_betti_curve(v, p.d_lo, p.d_hi, p.min_component_size);
    auto choice = select_dilation(f, p.alpha);
    assign = flood_fill_assign(v, choice.seeds);
    rep.delta_star = choice.delta_star;
    rep.betti = choice.interval.betti;
  } catch (const RoomSegmentationError&) {
    if (!p.fallback_single_room) throw;
    rep.fell_back = true;
    std::set<NodeId> all;
    for (const auto& [n, pd] : v.nodes) all.insert(n);
    assign = flood_fill_assign(v, {all});
  }
  auto layer = build_room_layer(g, assign);
  rep.num_rooms = static_cast<int>(layer.rooms.size());
  rep.unassigned_places = layer.unassigned_places.size();
  return rep;
}

}  // namespace atrium
