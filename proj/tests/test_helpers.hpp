#pragma once

#include <random>

#include "atrium/scene_graph.hpp"
#include "atrium/se3.hpp"
#include "atrium/world.hpp"

namespace atrium::testing {

inline Se3 random_se3(std::mt19937_64& rng, double trans_scale = 5.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec6 xi;
  for (int i = 0; i < 6; ++i) xi[i] = n(rng);
  xi.head<3>() *= 0.8;          // keep rotations away from pi
  xi.tail<3>() *= trans_scale;
  return Se3::exp(xi);
}

inline Vec3 random_vec3(std::mt19937_64& rng, double scale = 5.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return Vec3(u(rng), u(rng), u(rng));
}

/// Small fast world for end-to-end tests: four rooms, sparse objects.
inline WorldParams small_world_params() {
  WorldParams p;
  p.extent_x = 9.0;
  p.extent_y = 7.0;
  p.room_count = 4;
  p.min_room_dim = 2.8;
  p.objects_per_room_min = 1;
  p.objects_per_room_max = 2;
  return p;
}

/// Object-room-building graph shaped like the reference diagram: one
/// building, two rooms, five objects, with intra-room object edges.
inline SceneGraph object_room_fixture() {
  SceneGraph g;
  NodeId b = g.add_node(Layer::Building, BuildingAttrs{Vec3(0, 0, 0)});
  NodeId r1 = g.add_node(Layer::Rooms, RoomAttrs{Vec3(-2, 0, 0)});
  NodeId r2 = g.add_node(Layer::Rooms, RoomAttrs{Vec3(2, 0, 0)});
  g.add_edge(b, r1);
  g.add_edge(b, r2);
  g.add_edge(r1, r2);
  std::vector<NodeId> objs;
  for (int i = 0; i < 5; ++i) {
    ObjectAttrs oa;
    oa.centroid = Vec3(i < 3 ? -2.0 : 2.0, i * 0.5, 0);
    oa.label = 2 + i;
    NodeId o = g.add_node(Layer::ObjectsAgents, oa);
    g.add_edge(o, i < 3 ? r1 : r2);
    objs.push_back(o);
  }
  g.add_edge(objs[0], objs[1]);
  g.add_edge(objs[1], objs[2]);
  g.add_edge(objs[3], objs[4]);
  return g;
}

}  // namespace atrium::testing
