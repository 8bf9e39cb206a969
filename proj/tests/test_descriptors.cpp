#include <catch2/catch_amalgamated.hpp>

#include "atrium/descriptors.hpp"
#include "atrium/metrics.hpp"
#include "atrium/scene_graph.hpp"

using namespace atrium;

namespace {

struct DescScene {
  SceneGraph g;
  NodeId agent = kInvalidNode;
  std::vector<NodeId> places, objects;
};

/// Small scene around the origin, rigidly moved by T: five places of growing
/// clearance, three labeled objects, one agent parented to the first place.
DescScene desc_scene(const Se3& T = Se3{}) {
  DescScene s;
  const Vec3 pos[] = {{0, 0, 1}, {1.5, 0, 1}, {0, 2, 1}, {4, 0, 1}, {0, 4.5, 1}};
  const double clearance[] = {0.2, 0.4, 0.6, 0.9, 1.3};
  for (int i = 0; i < 5; ++i) {
    PlaceAttrs pa;
    pa.position = T * pos[i];
    pa.distance = clearance[i];
    pa.num_basis_points = 2;
    s.places.push_back(s.g.add_node(Layer::Places, pa));
  }
  const Vec3 centroid[] = {{0.5, 0.5, 0.5}, {2, 1, 0.5}, {3.5, 0.5, 0.5}};
  const int label[] = {2, 3, 3};
  for (int i = 0; i < 3; ++i) {
    ObjectAttrs oa;
    oa.centroid = T * centroid[i];
    oa.bbox.expand(oa.centroid);
    oa.label = label[i];
    s.objects.push_back(s.g.add_node(Layer::ObjectsAgents, oa));
  }
  AgentAttrs aa;
  aa.pose = T;
  aa.pose.t = T * Vec3(0.2, 0.1, 1);
  aa.keyframe = 42;
  aa.appearance = {{7, 0.5}, {9, 0.5}};
  s.agent = s.g.add_node(Layer::ObjectsAgents, aa);
  s.g.add_edge(s.agent, s.places[0]);
  return s;
}

HierarchicalDescriptor synthetic(NodeId agent, int64_t kf, Eigen::VectorXd place,
                                 std::map<int, double> object,
                                 std::map<int64_t, double> appearance, Aabb box) {
  HierarchicalDescriptor d;
  d.agent_node = agent;
  d.keyframe = kf;
  d.place_hist = std::move(place);
  d.object_hist = std::move(object);
  d.appearance = std::move(appearance);
  d.subgraph_bbox = box;
  return d;
}

Eigen::VectorXd hist2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("l1 distance on sparse maps handles disjoint keys") {
  std::map<int, double> a{{1, 0.5}, {2, 0.5}};
  std::map<int, double> b{{1, 0.25}, {3, 0.75}};
  REQUIRE(l1_distance(a, b) == Catch::Approx(0.25 + 0.5 + 0.75));
  REQUIRE(l1_distance(b, a) == l1_distance(a, b));
  REQUIRE(l1_distance(a, a) == 0.0);
  REQUIRE(l1_distance(a, {}) == Catch::Approx(1.0));
  REQUIRE(l1_distance(std::map<int, double>{}, std::map<int, double>{}) == 0.0);
}

TEST_CASE("l1 distance on vectors tolerates empty operands") {
  Eigen::VectorXd z;
  REQUIRE(l1_distance(z, z) == 0.0);
  REQUIRE(l1_distance(hist2(0.5, 0.5), z) == Catch::Approx(1.0));
  REQUIRE(l1_distance(hist2(1, 0), hist2(0, 1)) == Catch::Approx(2.0));
}

TEST_CASE("descriptors summarize the sub-graph around the parent place") {
  DescScene s = desc_scene();
  DescriptorPolicy policy;
  policy.min_nodes = 4;  // satisfied already at the minimum radius
  auto d = build_descriptor(s.g, s.agent, policy);
  REQUIRE(d.has_value());
  REQUIRE(d->agent_node == s.agent);
  REQUIRE(d->keyframe == 42);
  REQUIRE((d->center - Vec3(0, 0, 1)).norm() < 1e-12);
  REQUIRE(d->appearance == std::map<int64_t, double>{{7, 0.5}, {9, 0.5}});

  // radius 3 catches places 0..2 and objects 0..1
  REQUIRE(d->subgraph_place_ids ==
          std::set<NodeId>{s.places[0], s.places[1], s.places[2]});
  REQUIRE(d->subgraph_object_ids == std::set<NodeId>{s.objects[0], s.objects[1]});

  // clearances 0.2 / 0.4 / 0.6 land in bins 0 / 1 / 2 at width 0.25
  REQUIRE(d->place_hist.size() == 20);
  REQUIRE(d->place_hist[0] == Catch::Approx(1.0 / 3));
  REQUIRE(d->place_hist[1] == Catch::Approx(1.0 / 3));
  REQUIRE(d->place_hist[2] == Catch::Approx(1.0 / 3));
  REQUIRE(d->place_hist.sum() == Catch::Approx(1.0));
  REQUIRE(d->object_hist == std::map<int, double>{{2, 0.5}, {3, 0.5}});
}

TEST_CASE("the radius grows until the sub-graph is populated") {
  DescScene s = desc_scene();
  DescriptorPolicy policy;
  policy.min_nodes = 7;  // forces growth to radius 4
  auto d = build_descriptor(s.g, s.agent, policy);
  REQUIRE(d.has_value());
  REQUIRE(d->subgraph_place_ids.count(s.places[3]) == 1);   // at distance 4.0
  REQUIRE(d->subgraph_place_ids.count(s.places[4]) == 0);   // at distance 4.5
  REQUIRE(d->subgraph_object_ids.size() == 3);
}

TEST_CASE("agents without a parent place defer their descriptor") {
  DescScene s = desc_scene();
  AgentAttrs aa;
  aa.keyframe = 1;
  NodeId orphan = s.g.add_node(Layer::ObjectsAgents, aa);
  REQUIRE_FALSE(build_descriptor(s.g, orphan).has_value());
}

TEST_CASE("descriptor construction is deterministic") {
  DescScene s = desc_scene();
  auto a = build_descriptor(s.g, s.agent);
  auto b = build_descriptor(s.g, s.agent);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  REQUIRE(a->place_hist == b->place_hist);
  REQUIRE(a->object_hist == b->object_hist);
  REQUIRE(a->appearance == b->appearance);
  REQUIRE(a->subgraph_place_ids == b->subgraph_place_ids);
  REQUIRE(a->subgraph_object_ids == b->subgraph_object_ids);
}

TEST_CASE("rigid motion leaves every histogram untouched") {
  Se3 T;
  T.q = Eigen::Quaterniond(Eigen::AngleAxisd(1.1, Vec3(1, 2, 3).normalized()));
  T.t = Vec3(20, -7, 3);
  DescScene ref = desc_scene();
  DescScene moved = desc_scene(T);
  for (int min_nodes : {4, 7}) {
    DescriptorPolicy policy;
    policy.min_nodes = min_nodes;
    auto a = build_descriptor(ref.g, ref.agent, policy);
    auto b = build_descriptor(moved.g, moved.agent, policy);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    REQUIRE(l1_distance(a->place_hist, b->place_hist) < 1e-12);
    REQUIRE(l1_distance(a->object_hist, b->object_hist) < 1e-12);
    REQUIRE(l1_distance(a->appearance, b->appearance) < 1e-12);
    REQUIRE(a->subgraph_place_ids.size() == b->subgraph_place_ids.size());
    REQUIRE(a->subgraph_object_ids.size() == b->subgraph_object_ids.size());
    REQUIRE((T * a->center - b->center).norm() < 1e-12);
  }
}

TEST_CASE("matching walks the hierarchy and stops at the failing level") {
  Aabb box{Vec3(0, 0, 0), Vec3(1, 1, 1)};
  auto q = synthetic(100, 100, hist2(1, 0), {{2, 1.0}}, {{5, 1.0}}, box);
  std::vector<HierarchicalDescriptor> db;
  db.push_back(synthetic(1, 95, hist2(1, 0), {{2, 1.0}}, {{5, 1.0}}, box));       // masked
  db.push_back(synthetic(2, 10, hist2(1, 0), {{2, 1.0}}, {{5, 1.0}}, box));       // full match
  db.push_back(synthetic(3, 10, hist2(0, 1), {{2, 1.0}}, {{5, 1.0}}, box));       // place gate
  db.push_back(synthetic(4, 10, hist2(1, 0), {{3, 1.0}}, {{5, 1.0}}, box));       // object gate
  db.push_back(synthetic(5, 10, hist2(1, 0), {{2, 1.0}}, {{6, 1.0}}, box));       // object level

  MatchThresholds t;
  auto hits = match_top_down(q, db, t);
  REQUIRE(hits.size() == 2);
  REQUIRE(hits[0].match == 2);
  REQUIRE(hits[0].level == MatchLevel::Appearance);
  REQUIRE(hits[0].place_distance == 0.0);
  REQUIRE(hits[0].appearance_distance == 0.0);
  REQUIRE(hits[1].match == 5);
  REQUIRE(hits[1].level == MatchLevel::Object);
  REQUIRE(hits[1].appearance_distance == Catch::Approx(2.0));

  t.temporal_mask = 3;  // keyframe 95 is now fair game
  REQUIRE(match_top_down(q, db, t).size() == 3);
}

TEST_CASE("descriptor scores span the unit interval") {
  Aabb box{Vec3(0, 0, 0), Vec3(1, 1, 1)};
  auto a = synthetic(0, 0, hist2(1, 0), {{2, 1.0}}, {{5, 1.0}}, box);
  auto c = synthetic(1, 0, hist2(0, 1), {{3, 1.0}}, {{7, 1.0}}, box);
  REQUIRE(descriptor_score(a, a) == 1.0);
  REQUIRE(descriptor_score(a, c) == 0.0);  // maximally far in all three
}

TEST_CASE("precision at k matches hand enumeration") {
  Aabb near{Vec3(0, 0, 0), Vec3(1, 1, 1)};
  Aabb far{Vec3(10, 10, 10), Vec3(11, 11, 11)};
  std::vector<HierarchicalDescriptor> descs;
  descs.push_back(synthetic(0, 0, hist2(1, 0), {{2, 1.0}}, {{5, 1.0}}, near));
  descs.push_back(synthetic(1, 0, hist2(1, 0), {{2, 1.0}}, {{5, 1.0}}, near));
  descs.push_back(synthetic(2, 0, hist2(0, 1), {{3, 1.0}}, {{7, 1.0}}, far));

  // queries 0 and 1 rank each other first (overlapping boxes); query 2's best
  // candidate never overlaps it
  REQUIRE(descriptor_p_at_k(descs, 1, 0.5) == Catch::Approx(200.0 / 3));
  // at k=2 the far descriptor enters every top list and never overlaps
  REQUIRE(descriptor_p_at_k(descs, 2, 0.5) == Catch::Approx(100.0 / 3));
  REQUIRE_THROWS_AS(descriptor_p_at_k(descs, 3, 0.5), std::invalid_argument);
}
