#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <queue>
#include <random>
#include <set>
#include <vector>

#include "atrium/esdf.hpp"
#include "atrium/geometry.hpp"
#include "atrium/gvd.hpp"
#include "atrium/places.hpp"
#include "atrium/rooms.hpp"
#include "atrium/scene_graph.hpp"

using namespace atrium;

namespace {

// Reference clustering: connected components of skeleton voxels under
// 26-adjacency restricted to pairs whose positions share a hash cell.
std::set<std::set<size_t>> reference_clusters(const VoxelGrid& g,
                                              const std::map<size_t, GvdVoxel>& gvd,
                                              double cell) {
  std::set<std::set<size_t>> out;
  std::set<size_t> seen;
  for (const auto& [start, sv] : gvd) {
    if (seen.count(start)) continue;
    std::set<size_t> comp;
    std::queue<size_t> q;
    q.push(start);
    seen.insert(start);
    while (!q.empty()) {
      size_t v = q.front();
      q.pop();
      comp.insert(v);
      CellKey h = cell_of(gvd.at(v).position, cell);
      VoxelIndex c = g.from_linear(v);
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (!dx && !dy && !dz) continue;
            VoxelIndex u{c.x + dx, c.y + dy, c.z + dz};
            if (!g.in_bounds(u)) continue;
            size_t n = g.linear(u);
            auto it = gvd.find(n);
            if (it == gvd.end() || seen.count(n)) continue;
            if (!(cell_of(it->second.position, cell) == h)) continue;
            seen.insert(n);
            q.push(n);
          }
    }
    out.insert(std::move(comp));
  }
  return out;
}

std::set<std::set<size_t>> cluster_sets(const PlaceClustering& pc) {
  std::set<std::set<size_t>> out;
  for (const auto& [id, c] : pc.clusters()) out.insert(c.voxels);
  return out;
}

VoxelGrid random_grid(std::mt19937_64& rng, int nx, int ny, int nz, double occ) {
  VoxelGrid g(Vec3::Zero(), 0.1, nx, ny, nz, VoxelState::Free);
  std::bernoulli_distribution coin(occ);
  for (size_t i = 0; i < g.num_cells(); ++i)
    if (coin(rng)) g.set_state(g.from_linear(i), VoxelState::Occupied);
  return g;
}

// Reference Betti-0: rebuild the dilation subgraph from scratch at one
// threshold and count components at least min_size large by flood fill.
int betti_by_bfs(const PlacesView& v, double delta, int min_size) {
  std::map<NodeId, std::vector<NodeId>> adj;
  std::set<NodeId> active;
  for (const auto& [n, pd] : v.nodes)
    if (pd.second >= delta) active.insert(n);
  for (const auto& [e, d] : v.edges)
    if (d >= delta && active.count(e.first) && active.count(e.second)) {
      adj[e.first].push_back(e.second);
      adj[e.second].push_back(e.first);
    }
  std::set<NodeId> seen;
  int count = 0;
  for (NodeId start : active) {
    if (seen.count(start)) continue;
    int size = 0;
    std::queue<NodeId> q;
    q.push(start);
    seen.insert(start);
    while (!q.empty()) {
      NodeId n = q.front();
      q.pop();
      ++size;
      auto it = adj.find(n);
      if (it == adj.end()) continue;
      for (NodeId to : it->second)
        if (!seen.count(to)) {
          seen.insert(to);
          q.push(to);
        }
    }
    if (size >= min_size) ++count;
  }
  return count;
}

PlacesView random_view(std::mt19937_64& rng, int n, double edge_prob) {
  PlacesView v;
  std::uniform_real_distribution<double> pos(-10.0, 10.0), clr(0.1, 2.0), frac(0.5, 1.0);
  for (int i = 0; i < n; ++i) v.nodes[i] = {Vec3(pos(rng), pos(rng), 0.0), clr(rng)};
  std::bernoulli_distribution coin(edge_prob);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(rng)) {
        double d = std::min(v.nodes[i].second, v.nodes[j].second) * frac(rng);
        v.edges[{i, j}] = d;
      }
  return v;
}

/// Scene graph with `blobs` clusters of places (internal clearance ~1) joined
/// in a chain by bottleneck edges of the given clearance.
SceneGraph blob_graph(int blobs, int per_blob, double bottleneck,
                      std::map<std::pair<NodeId, NodeId>, double>* clearance) {
  SceneGraph g;
  std::vector<std::vector<NodeId>> groups(blobs);
  for (int b = 0; b < blobs; ++b)
    for (int i = 0; i < per_blob; ++i) {
      PlaceAttrs a;
      a.position = Vec3(4.0 * b + 0.3 * i, 0.1 * (i % 3), 0);
      a.distance = 1.0 + 0.01 * i;
      NodeId id = g.add_node(Layer::Places, a);
      groups[b].push_back(id);
      if (i > 0) g.add_edge(id, groups[b][i - 1]);
    }
  for (int b = 0; b + 1 < blobs; ++b) {
    NodeId from = groups[b].back(), to = groups[b + 1].front();
    g.add_edge(from, to);
    if (clearance) (*clearance)[{std::min(from, to), std::max(from, to)}] = bottleneck;
  }
  return g;
}

}  // namespace

TEST_CASE("batch clustering equals hash-restricted connected components") {
  std::mt19937_64 rng(89);
  for (int trial = 0; trial < 20; ++trial) {
    VoxelGrid g = random_grid(rng, 18, 15, 4, 0.07);
    EsdfField f = compute_esdf(g);
    GvdParams p;
    p.theta_min = 0.0;
    auto gvd = extract_gvd(g, f, p);
    double cell = (trial % 2) ? 1.0 : 0.5;
    PlaceClustering pc = cluster_places(g, gvd, cell);
    REQUIRE(cluster_sets(pc) == reference_clusters(g, gvd, cell));
  }
}

TEST_CASE("incremental insert and removal converge to the batch partition") {
  std::mt19937_64 rng(97);
  VoxelGrid g = random_grid(rng, 20, 16, 4, 0.06);
  EsdfField f = compute_esdf(g);
  GvdParams p;
  p.theta_min = 0.0;
  auto gvd = extract_gvd(g, f, p);

  std::vector<size_t> all;
  for (const auto& [v, _] : gvd) all.push_back(v);
  REQUIRE(all.size() >= 10);

  PlaceClustering inc(1.0);
  PlaceClustering::UpdateResult r;
  std::vector<size_t> half1(all.begin(), all.begin() + all.size() / 2);
  std::vector<size_t> half2(all.begin() + all.size() / 2, all.end());
  inc.insert(g, gvd, half1, r);
  inc.insert(g, gvd, half2, r);

  // drop every fifth voxel, re-insert the orphans, as the frontend does
  std::vector<size_t> gone;
  for (size_t i = 0; i < all.size(); i += 5) gone.push_back(all[i]);
  std::map<size_t, GvdVoxel> shrunk = gvd;
  for (size_t v : gone) shrunk.erase(v);
  auto orphans = inc.remove_voxels(gone, r);
  inc.insert(g, shrunk, orphans, r);

  PlaceClustering batch = cluster_places(g, shrunk, 1.0);
  REQUIRE(cluster_sets(inc) == cluster_sets(batch));
}

TEST_CASE("cluster representative prefers richer basis sets") {
  VoxelGrid g(Vec3::Zero(), 0.1, 6, 1, 1, VoxelState::Free);
  std::map<size_t, GvdVoxel> gvd;
  for (size_t i = 0; i < 3; ++i) {
    GvdVoxel v;
    v.cell = i;
    v.position = g.center({static_cast<int>(i), 0, 0});
    v.distance = 0.3;
    v.basis_points.resize(i == 1 ? 4 : 2, Vec3::Zero());
    gvd[i] = v;
  }
  PlaceClustering pc = cluster_places(g, gvd, 10.0);  // one cluster
  REQUIRE(pc.clusters().size() == 1);
  REQUIRE(pc.representative(pc.clusters().begin()->first, gvd) == 1);
}

TEST_CASE("union-find filtration equals per-threshold recount") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    PlacesView v = random_view(rng, 5 + static_cast<int>(rng() % 40), 0.15);
    int min_size = 1 + static_cast<int>(rng() % 4);
    Filtration f = compute_betti_curve(v, 0.0, 3.0, min_size);
    for (double t : f.thresholds)
      REQUIRE(f.betti0.at(t) == betti_by_bfs(v, t, min_size));
  }
}

TEST_CASE("filtration component lists match their counts") {
  std::mt19937_64 rng(103);
  PlacesView v = random_view(rng, 30, 0.12);
  Filtration f = compute_betti_curve(v, 0.0, 3.0, 2);
  for (double t : f.thresholds) {
    REQUIRE(static_cast<int>(f.components.at(t).size()) == f.betti0.at(t));
    for (const auto& comp : f.components.at(t)) {
      REQUIRE(static_cast<int>(comp.size()) >= 2);
      for (NodeId n : comp) REQUIRE(v.nodes.at(n).second >= t);
    }
  }
}

TEST_CASE("inverted dilation window is rejected") {
  PlacesView v;
  REQUIRE_THROWS_AS(compute_betti_curve(v, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("persistence intervals are maximal constant runs") {
  Filtration f;
  f.thresholds = {0.2, 0.5, 0.8, 1.1};
  f.betti0 = {{0.2, 1}, {0.5, 3}, {0.8, 3}, {1.1, 0}};
  auto iv = persistence_intervals(f);
  REQUIRE(iv.size() == 2);
  REQUIRE(iv[0].betti == 1);
  REQUIRE(iv[0].d_min == 0.2);
  REQUIRE(iv[0].d_max == 0.2);
  REQUIRE(iv[1].betti == 3);
  REQUIRE(iv[1].d_min == 0.5);
  REQUIRE(iv[1].d_max == 0.8);  // run ends before betti drops to zero
}

TEST_CASE("dilation selection prefers component count among long intervals") {
  Filtration f;
  f.thresholds = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  // one long 2-component interval, one equally long 4-component interval,
  // and a short 9-component spike that alpha filtering must ignore
  f.betti0 = {{0.1, 2}, {0.2, 2}, {0.3, 2}, {0.4, 4}, {0.5, 4}, {0.6, 4}, {0.7, 9}};
  for (double t : f.thresholds) f.components[t] = {};
  f.components[0.4].resize(4);
  DilationChoice c = select_dilation(f, 0.5);
  REQUIRE(c.interval.betti == 4);
  REQUIRE(c.delta_star == 0.4);
  REQUIRE(c.seeds.size() == 4);
}

TEST_CASE("empty filtration raises a segmentation error") {
  Filtration f;
  REQUIRE_THROWS_AS(select_dilation(f), RoomSegmentationError);
}

TEST_CASE("flood fill splits chains at clearance bottlenecks") {
  std::map<std::pair<NodeId, NodeId>, double> clearance;
  SceneGraph g = blob_graph(2, 6, 0.2, &clearance);
  PlacesView v = places_view(g, &clearance);
  // seeds: first place of each blob
  std::vector<std::set<NodeId>> seeds = {{0}, {6}};
  RoomAssignment a = flood_fill_assign(v, seeds);
  REQUIRE(a.num_rooms == 2);
  REQUIRE(a.unassigned.empty());
  for (NodeId n = 0; n < 6; ++n) REQUIRE(a.room_of.at(n) == 0);
  for (NodeId n = 6; n < 12; ++n) REQUIRE(a.room_of.at(n) == 1);
}

TEST_CASE("places unreachable from any seed stay unassigned") {
  SceneGraph g = blob_graph(1, 4, 0.2, nullptr);
  PlaceAttrs lone;
  lone.position = Vec3(50, 50, 0);
  lone.distance = 1.0;
  NodeId isolated = g.add_node(Layer::Places, lone);
  PlacesView v = places_view(g);
  RoomAssignment a = flood_fill_assign(v, {{0}});
  REQUIRE(a.unassigned == std::vector<NodeId>{isolated});
}

TEST_CASE("room layer construction wires rooms, adjacency, and the building") {
  std::map<std::pair<NodeId, NodeId>, double> clearance;
  SceneGraph g = blob_graph(3, 5, 0.25, &clearance);
  PlacesView v = places_view(g, &clearance);
  std::vector<std::set<NodeId>> seeds = {{0}, {5}, {10}};
  RoomAssignment a = flood_fill_assign(v, seeds);
  build_room_layer(g, a);

  REQUIRE(g.nodes_in_layer(Layer::Rooms).size() == 3);
  REQUIRE(g.nodes_in_layer(Layer::Building).size() == 1);
  NodeId building = *g.nodes_in_layer(Layer::Building).begin();
  std::map<int, NodeId> room_node;
  for (NodeId r : g.nodes_in_layer(Layer::Rooms)) {
    REQUIRE(g.has_edge(r, building));
    // centroid is the mean of member place positions
    Vec3 c = std::get<RoomAttrs>(g.node(r).attrs).centroid;
    Vec3 mean = Vec3::Zero();
    int count = 0;
    for (NodeId pl : g.neighbors_in_layer(r, Layer::Places)) {
      mean += std::get<PlaceAttrs>(g.node(pl).attrs).position;
      ++count;
    }
    REQUIRE(count > 0);
    mean /= count;
    REQUIRE((c - mean).norm() < 1e-12);
  }
  // chained blobs: adjacent rooms share a scene edge, distant ones do not
  std::vector<NodeId> rooms(g.nodes_in_layer(Layer::Rooms).begin(),
                            g.nodes_in_layer(Layer::Rooms).end());
  int room_edges = 0;
  for (size_t i = 0; i < rooms.size(); ++i)
    for (size_t j = i + 1; j < rooms.size(); ++j)
      room_edges += g.has_edge(rooms[i], rooms[j]);
  REQUIRE(room_edges == 2);
}

TEST_CASE("empty room assignment is rejected") {
  SceneGraph g;
  RoomAssignment a;
  REQUIRE_THROWS_AS(build_room_layer(g, a), std::invalid_argument);
}

TEST_CASE("segmentation recovers the blob count end to end") {
  std::map<std::pair<NodeId, NodeId>, double> clearance;
  SceneGraph g = blob_graph(4, 8, 0.2, &clearance);
  RoomSegmentationParams p;
  p.d_lo = 0.05;
  p.d_hi = 1.5;
  p.min_component_size = 3;
  RoomSegmentationReport rep = segment_rooms(g, p, &clearance);
  REQUIRE(rep.num_rooms == 4);
  REQUIRE_FALSE(rep.fell_back);
  REQUIRE(rep.delta_star > 0.2);  // past the bottleneck clearance
  REQUIRE(g.nodes_in_layer(Layer::Rooms).size() == 4);
  // rerunning replaces, not duplicates, the symbolic layers
  RoomSegmentationReport rep2 = segment_rooms(g, p, &clearance);
  REQUIRE(rep2.num_rooms == 4);
  REQUIRE(g.nodes_in_layer(Layer::Rooms).size() == 4);
  REQUIRE(g.nodes_in_layer(Layer::Building).size() == 1);
}

TEST_CASE("degenerate curves fall back to a single room when allowed") {
  SceneGraph g = blob_graph(1, 5, 0.2, nullptr);
  RoomSegmentationParams p;
  p.min_component_size = 15;  // every component is too small to persist
  RoomSegmentationReport rep = segment_rooms(g, p);
  REQUIRE(rep.fell_back);
  REQUIRE(rep.num_rooms == 1);

  SceneGraph g2 = blob_graph(1, 5, 0.2, nullptr);
  p.fallback_single_room = false;
  REQUIRE_THROWS_AS(segment_rooms(g2, p), RoomSegmentationError);
}
