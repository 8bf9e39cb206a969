#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "atrium/interpolation.hpp"
#include "atrium/reconcile.hpp"
#include "test_helpers.hpp"

using namespace atrium;

namespace {

/// Reference k-nearest-neighbors by full scan, same ordering contract.
std::pair<std::vector<std::pair<double, int>>, double> brute_knn(
    const std::vector<Vec3>& pts, const Vec3& x, int k) {
  std::vector<std::pair<double, int>> all;
  for (size_t i = 0; i < pts.size(); ++i) all.push_back({(pts[i] - x).norm(), int(i)});
  std::sort(all.begin(), all.end());
  double next = all.size() > size_t(k) ? all[k].first : -1.0;
  if (all.size() > size_t(k)) all.resize(k);
  return {std::move(all), next};
}

DeformationGraph controls_only(const std::vector<Vec3>& pos) {
  DeformationGraph dg;
  for (size_t i = 0; i < pos.size(); ++i) {
    Se3 T;
    T.t = pos[i];
    dg.nodes[NodeId(i)] = {DefNodeKind::ControlPoint, T};
  }
  return dg;
}

/// Scene with two mesh clusters forming one labeled object, an agent, two
/// places, a room and the building: every layer apply_deformation touches.
struct FullScene {
  SceneGraph g;
  std::vector<NodeId> mesh;
  NodeId object, agent, room, building;
  std::vector<NodeId> places;
};

FullScene full_scene() {
  FullScene s;
  for (Vec3 p : {Vec3(0.1, 0.1, 0), Vec3(0.3, 0.2, 0), Vec3(2.2, 0.1, 0), Vec3(2.4, 0.3, 0)}) {
    SurfacePointAttrs sp;
    sp.position = p;
    sp.label = 3;
    sp.first_keyframe = 0;
    s.mesh.push_back(s.g.add_node(Layer::Mesh, sp));
  }
  ObjectAttrs oa;
  oa.label = 3;
  oa.members = {s.mesh[0], s.mesh[1]};
  Vec3 c = Vec3::Zero();
  for (NodeId m : oa.members) {
    Vec3 p = std::get<SurfacePointAttrs>(s.g.node(m).attrs).position;
    c += p;
    oa.bbox.expand(p);
  }
  oa.centroid = c / 2;
  s.object = s.g.add_node(Layer::ObjectsAgents, oa);
  for (NodeId m : oa.members) s.g.add_edge(s.object, m);

  AgentAttrs aa;
  aa.keyframe = 0;
  aa.pose.t = Vec3(1, 1, 0);
  s.agent = s.g.add_node(Layer::ObjectsAgents, aa);

  for (Vec3 p : {Vec3(0.5, 1.5, 0), Vec3(2.0, 1.5, 0)}) {
    PlaceAttrs pa;
    pa.position = p;
    pa.distance = 1.0;
    pa.basis_points = {p + Vec3(0.2, 0, 0)};
    pa.num_basis_points = 1;
    s.places.push_back(s.g.add_node(Layer::Places, pa));
  }
  s.g.add_edge(s.places[0], s.places[1]);
  s.g.add_edge(s.agent, s.places[0]);
  s.g.add_edge(s.object, s.places[0]);

  RoomAttrs ra;
  ra.centroid = Vec3(1.25, 1.5, 0);
  s.room = s.g.add_node(Layer::Rooms, ra);
  for (NodeId p : s.places) s.g.add_edge(s.room, p);
  BuildingAttrs ba;
  ba.centroid = ra.centroid;
  s.building = s.g.add_node(Layer::Building, ba);
  s.g.add_edge(s.building, s.room);
  return s;
}

Vec3 position_of(const SceneGraph& g, NodeId n) { return node_position(g.node(n).attrs); }

}  // namespace

TEST_CASE("the spatial index agrees with a full scan") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 150; ++trial) {
    int n = int(rng() % 41);
    double cell = std::vector<double>{0.5, 1.0, 2.3}[rng() % 3];
    int k = 1 + int(rng() % 6);
    std::vector<Vec3> pts;
    for (int i = 0; i < n; ++i) pts.push_back(testing::random_vec3(rng, 6.0));
    detail::ControlIndex index(pts, cell);
    for (int q = 0; q < 5; ++q) {
      // queries both inside and far outside the cloud
      Vec3 x = testing::random_vec3(rng, q == 4 ? 30.0 : 6.0);
      double next = 0;
      auto got = index.nearest(x, k, &next);
      auto [want, want_next] = brute_knn(pts, x, k);
      REQUIRE(got.size() == want.size());
      for (size_t i = 0; i < got.size(); ++i) {
        REQUIRE(got[i].second == want[i].second);
        REQUIRE(got[i].first == want[i].first);
      }
      REQUIRE(next == want_next);
    }
  }
}

TEST_CASE("an identity deformation moves nothing") {
  std::mt19937_64 rng(67);
  std::vector<Vec3> pos;
  for (int i = 0; i < 12; ++i) pos.push_back(testing::random_vec3(rng, 4.0));
  DeformationGraph dg = controls_only(pos);
  std::map<NodeId, Se3> optimized;
  for (const auto& [n, dn] : dg.nodes) optimized[n] = dn.pose;
  MeshDeformer deform(dg, optimized);
  for (int q = 0; q < 40; ++q) {
    Vec3 x = testing::random_vec3(rng, 5.0);
    REQUIRE((deform(x) - x).norm() < 1e-12);
  }
}

TEST_CASE("a shared rigid motion is reproduced exactly") {
  std::mt19937_64 rng(71);
  Se3 M = testing::random_se3(rng);
  std::vector<Vec3> pos;
  for (int i = 0; i < 15; ++i) pos.push_back(testing::random_vec3(rng, 4.0));
  DeformationGraph dg = controls_only(pos);
  std::map<NodeId, Se3> optimized;
  for (const auto& [n, dn] : dg.nodes) optimized[n] = M * dn.pose;
  MeshDeformer deform(dg, optimized);
  for (int q = 0; q < 40; ++q) {
    Vec3 x = testing::random_vec3(rng, 5.0);
    REQUIRE((deform(x) - M * x).norm() < 1e-9);
  }
}

TEST_CASE("a single control acts as a rigid transform") {
  std::mt19937_64 rng(73);
  Vec3 g = Vec3(1, -2, 0.5);
  DeformationGraph dg = controls_only({g});
  Se3 T = testing::random_se3(rng);
  std::map<NodeId, Se3> optimized{{0, T}};
  MeshDeformer deform(dg, optimized);
  for (int q = 0; q < 20; ++q) {
    Vec3 x = testing::random_vec3(rng, 5.0);
    Vec3 want = T.rotation() * (x - g) + T.t;
    REQUIRE((deform(x) - want).norm() < 1e-12);
  }
}

TEST_CASE("blend weights follow the distance-ratio falloff") {
  // controls at distances 1..4 from the query, the fifth at 5 sets the scale
  std::vector<Vec3> pos = {{1, 0, 0}, {0, 2, 0}, {-3, 0, 0}, {0, 0, 4}, {0, -5, 0}};
  DeformationGraph dg = controls_only(pos);
  std::map<NodeId, Se3> optimized;
  std::vector<double> delta = {1, 10, 100, 1000, 0};
  for (size_t i = 0; i < pos.size(); ++i) {
    Se3 T;
    T.t = pos[i] + Vec3(delta[i], 0, 0);  // pure translation by delta_i
    optimized[NodeId(i)] = T;
  }
  MeshDeformer deform(dg, optimized);

  std::array<double, 4> w{};
  double total = 0;
  for (int k = 0; k < 4; ++k) {
    double v = 1.0 - (k + 1.0) / 5.0;
    w[k] = v * v;
    total += w[k];
  }
  double expected = 0;
  for (int k = 0; k < 4; ++k) expected += w[k] / total * delta[k];
  Vec3 out = deform(Vec3::Zero());
  REQUIRE(out.x() == Catch::Approx(expected).epsilon(1e-12));
  REQUIRE(out.y() == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("deformation propagates through every layer") {
  std::mt19937_64 rng(79);
  FullScene s = full_scene();
  // controls: lowest mesh id of each cluster, as the builder would pick
  DeformationGraph dg;
  for (NodeId c : {s.mesh[0], s.mesh[2]}) {
    Se3 T;
    T.t = std::get<SurfacePointAttrs>(s.g.node(c).attrs).position;
    dg.nodes[c] = {DefNodeKind::ControlPoint, T};
  }
  dg.nodes[s.agent] = {DefNodeKind::Agent, std::get<AgentAttrs>(s.g.node(s.agent).attrs).pose};
  for (NodeId p : s.places) {
    Se3 T;
    T.t = std::get<PlaceAttrs>(s.g.node(p).attrs).position;
    dg.nodes[p] = {DefNodeKind::Place, T};
  }
  dg.gauge = s.agent;

  Se3 M = testing::random_se3(rng);
  std::map<NodeId, Se3> optimized;
  for (const auto& [n, dn] : dg.nodes) optimized[n] = M * dn.pose;

  SceneGraph out = apply_deformation(s.g, dg, optimized);
  for (NodeId m : s.mesh) {
    Vec3 before = position_of(s.g, m);
    REQUIRE((position_of(out, m) - M * before).norm() < 1e-9);
  }
  const auto& aa = std::get<AgentAttrs>(out.node(s.agent).attrs);
  REQUIRE((aa.pose.t - (M * dg.nodes.at(s.agent).pose).t).norm() < 1e-12);
  for (NodeId p : s.places) {
    const auto& pa = std::get<PlaceAttrs>(out.node(p).attrs);
    REQUIRE((pa.position - M * position_of(s.g, p)).norm() < 1e-12);
    REQUIRE((pa.basis_points[0] -
             M * std::get<PlaceAttrs>(s.g.node(p).attrs).basis_points[0]).norm() < 1e-9);
  }
  const auto& oa = std::get<ObjectAttrs>(out.node(s.object).attrs);
  Vec3 mean = Vec3::Zero();
  for (NodeId m : oa.members) mean += position_of(out, m);
  mean /= double(oa.members.size());
  REQUIRE((oa.centroid - mean).norm() < 1e-12);
  for (NodeId m : oa.members) REQUIRE(oa.bbox.contains(position_of(out, m)));

  const auto& ra = std::get<RoomAttrs>(out.node(s.room).attrs);
  Vec3 pl_mean = 0.5 * (std::get<PlaceAttrs>(out.node(s.places[0]).attrs).position +
                        std::get<PlaceAttrs>(out.node(s.places[1]).attrs).position);
  REQUIRE((ra.centroid - pl_mean).norm() < 1e-12);
  const auto& ba = std::get<BuildingAttrs>(out.node(s.building).attrs);
  REQUIRE((ba.centroid - ra.centroid).norm() < 1e-12);
}

TEST_CASE("place merging folds whole chains into the lowest id") {
  SceneGraph g;
  std::vector<NodeId> p;
  for (Vec3 pos : {Vec3(0, 0, 0), Vec3(0.3, 0, 0), Vec3(0.6, 0, 0), Vec3(5, 0, 0)}) {
    PlaceAttrs pa;
    pa.position = pos;
    pa.distance = 0.5;
    p.push_back(g.add_node(Layer::Places, pa));
  }
  g.add_edge(p[2], p[3]);  // survivor must inherit this link
  ObjectAttrs oa;
  oa.centroid = Vec3(0.5, 0.2, 0);
  oa.label = 2;
  NodeId obj = g.add_node(Layer::ObjectsAgents, oa);
  g.add_edge(obj, p[2]);

  auto mapping = merge_close_places(g, 0.4);
  // 0-0.3 and 0.3-0.6 are both under the threshold: one transitive group
  REQUIRE(mapping.at(p[0]) == p[0]);
  REQUIRE(mapping.at(p[1]) == p[0]);
  REQUIRE(mapping.at(p[2]) == p[0]);
  REQUIRE(mapping.at(p[3]) == p[3]);
  REQUIRE_FALSE(g.has_node(p[1]));
  REQUIRE_FALSE(g.has_node(p[2]));
  REQUIRE(g.has_edge(p[0], p[3]));
  REQUIRE(g.has_edge(obj, p[0]));
}

TEST_CASE("merge groups equal the proximity components") {
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 3 + int(rng() % 20);
    std::vector<Vec3> pos;
    for (int i = 0; i < n; ++i) pos.push_back(testing::random_vec3(rng, 2.0));

    // oracle: union-find over all pairs below the threshold
    UnionFind uf(n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if ((pos[i] - pos[j]).norm() < 0.4) uf.unite(i, j);

    SceneGraph g;
    std::vector<NodeId> ids;
    for (int i = 0; i < n; ++i) {
      PlaceAttrs pa;
      pa.position = pos[i];
      pa.distance = 0.5;
      ids.push_back(g.add_node(Layer::Places, pa));
    }
    auto mapping = merge_close_places(g, 0.4);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        bool same_group = uf.find(i) == uf.find(j);
        REQUIRE((mapping.at(ids[i]) == mapping.at(ids[j])) == same_group);
      }
    // survivors of distinct groups stay farther apart than the threshold
    for (NodeId a : g.nodes_in_layer(Layer::Places))
      for (NodeId b : g.nodes_in_layer(Layer::Places))
        if (a < b)
          REQUIRE((position_of(g, a) - position_of(g, b)).norm() >= 0.4);
  }
}

TEST_CASE("duplicate objects merge to a fixpoint") {
  SceneGraph g;
  std::vector<NodeId> mesh;
  for (double x : {0.0, 0.5, 1.0, 1.5, 2.0, 2.5}) {
    SurfacePointAttrs sp;
    sp.position = Vec3(x, 0, 0);
    sp.label = 4;
    mesh.push_back(g.add_node(Layer::Mesh, sp));
  }
  auto add_object = [&](std::vector<NodeId> members, int label) {
    ObjectAttrs oa;
    oa.label = label;
    oa.members = std::move(members);
    Vec3 c = Vec3::Zero();
    for (NodeId m : oa.members) {
      Vec3 p = std::get<SurfacePointAttrs>(g.node(m).attrs).position;
      c += p;
      oa.bbox.expand(p);
    }
    oa.centroid = c / double(oa.members.size());
    NodeId id = g.add_node(Layer::ObjectsAgents, oa);
    for (NodeId m : oa.members) g.add_edge(id, m);
    return id;
  };
  // chain: a and b overlap, b and c overlap, a and c only via the union
  NodeId a = add_object({mesh[0], mesh[1], mesh[2]}, 4);
  NodeId b = add_object({mesh[2], mesh[3], mesh[4]}, 4);
  NodeId c = add_object({mesh[4], mesh[5]}, 4);
  NodeId other = add_object({mesh[0], mesh[5]}, 7);  // same span, different label

  int merged = merge_duplicate_objects(g);
  REQUIRE(merged == 2);
  REQUIRE(g.has_node(a));
  REQUIRE_FALSE(g.has_node(b));
  REQUIRE_FALSE(g.has_node(c));
  REQUIRE(g.has_node(other));
  const auto& oa = std::get<ObjectAttrs>(g.node(a).attrs);
  REQUIRE(oa.members == mesh);  // union, sorted, deduplicated
  for (NodeId m : mesh) REQUIRE(g.has_edge(a, m));
  REQUIRE(merge_duplicate_objects(g) == 0);
}

TEST_CASE("clearance keys are remapped onto the survivors") {
  SceneGraph g;
  std::vector<NodeId> p;
  for (Vec3 pos : {Vec3(0, 0, 0), Vec3(0.2, 0, 0), Vec3(4, 0, 0)}) {
    PlaceAttrs pa;
    pa.position = pos;
    pa.distance = 0.8;
    p.push_back(g.add_node(Layer::Places, pa));
  }
  g.add_edge(p[0], p[2]);
  g.add_edge(p[1], p[2]);
  std::map<std::pair<NodeId, NodeId>, double> clearance{
      {{p[0], p[2]}, 0.5}, {{p[1], p[2]}, 0.3}, {{p[0], p[1]}, 0.9}};
  RoomSegmentationParams rooms;
  reconcile(g, rooms, &clearance, 0.4);
  // the merged pair's key vanished; duplicates keep the tighter clearance
  REQUIRE(clearance.size() == 1);
  auto key = std::minmax(p[0], p[2]);
  REQUIRE(clearance.count({key.first, key.second}) == 1);
  REQUIRE(clearance.at({key.first, key.second}) == 0.3);
}

TEST_CASE("reconciling twice changes nothing") {
  std::mt19937_64 rng(89);
  for (int trial = 0; trial < 20; ++trial) {
    SceneGraph g;
    int n = 6 + int(rng() % 12);
    std::vector<NodeId> ids;
    for (int i = 0; i < n; ++i) {
      PlaceAttrs pa;
      pa.position = testing::random_vec3(rng, 3.0);
      pa.distance = 0.5 + 0.001 * double(rng() % 1000);
      ids.push_back(g.add_node(Layer::Places, pa));
    }
    for (int i = 1; i < n; ++i) g.add_edge(ids[i - 1], ids[i]);
    AgentAttrs aa;
    aa.pose.t = Vec3(0, 0, 0);
    NodeId agent = g.add_node(Layer::ObjectsAgents, aa);
    g.add_edge(agent, ids[0]);

    RoomSegmentationParams rooms;
    reconcile(g, rooms, nullptr, 0.4);

    auto partition = [&](const SceneGraph& s) {
      std::set<std::set<NodeId>> out;
      for (NodeId r : s.nodes_in_layer(Layer::Rooms)) {
        std::set<NodeId> members;
        for (NodeId m : s.neighbors_in_layer(r, Layer::Places)) members.insert(m);
        out.insert(std::move(members));
      }
      return out;
    };
    auto place_set = [&](const SceneGraph& s) {
      std::set<NodeId> out = s.nodes_in_layer(Layer::Places);
      return out;
    };

    auto places_before = place_set(g);
    auto rooms_before = partition(g);
    ReconcileReport second = reconcile(g, rooms, nullptr, 0.4);
    for (const auto& [from, to] : second.place_mapping) REQUIRE(from == to);
    REQUIRE(second.objects_merged == 0);
    REQUIRE(place_set(g) == places_before);
    REQUIRE(partition(g) == rooms_before);
  }
}
