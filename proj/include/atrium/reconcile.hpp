#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "atrium/geometry.hpp"
#include "atrium/rooms.hpp"
#include "atrium/scene_graph.hpp"
#include "atrium/union_find.hpp"

namespace atrium {

/// Merge places that a loop correction has pulled within `threshold` of each
/// other. Closeness is taken transitively (union-find over all close pairs),
/// the lowest node id of each group survives, and every edge of a removed
/// node is rerouted to its survivor. Returns the old-to-new id map (identity
/// for kept nodes). Survivor groups end up pairwise farther than `threshold`
/// apart, so running the merge twice changes nothing.
inline std::map<NodeId, NodeId> merge_close_places(SceneGraph& g, double threshold = 0.4) {
  std::vector<NodeId> places(g.nodes_in_layer(Layer::Places).begin(),
                             g.nodes_in_layer(Layer::Places).end());
  std::map<NodeId, NodeId> mapping;
  for (NodeId n : places) mapping[n] = n;
  if (places.size() < 2) return mapping;

  std::map<NodeId, int> idx;
  for (NodeId n : places) idx[n] = static_cast<int>(idx.size());
  UnionFind uf(places.size());

  std::map<CellKey, std::vector<NodeId>> hash;
  auto pos = [&](NodeId n) { return std::get<PlaceAttrs>(g.node(n).attrs).position; };
  for (NodeId n : places) hash[cell_of(pos(n), threshold)].push_back(n);
  for (NodeId n : places) {
    CellKey c = cell_of(pos(n), threshold);
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          auto it = hash.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == hash.end()) continue;
          for (NodeId m : it->second)
            if (m > n && (pos(m) - pos(n)).norm() < threshold)
              uf.unite(idx.at(n), idx.at(m));
        }
  }

  std::map<int, NodeId> survivor;  // root -> lowest member id (places is sorted)
  for (NodeId n : places) {
    int r = uf.find(idx.at(n));
    if (!survivor.count(r)) survivor[r] = n;
  }
  for (NodeId n : places) mapping[n] = survivor.at(uf.find(idx.at(n)));

  for (NodeId n : places) {
    NodeId s = mapping.at(n);
    if (s == n) continue;
    std::vector<NodeId> nbrs;
    for (Layer l : {Layer::Mesh, Layer::ObjectsAgents, Layer::Places, Layer::Rooms})
      for (NodeId m : g.neighbors_in_layer(n, l)) nbrs.push_back(m);
    g.remove_node(n);
    for (NodeId m : nbrs) {
      NodeId target = m;
      if (auto it = mapping.find(m); it != mapping.end()) target = it->second;
      if (target != s && g.has_node(target) && !g.has_edge(s, target)) g.add_edge(s, target);
    }
  }
  return mapping;
}

/// Fold duplicated objects together: two objects of the same label merge when
/// either centroid falls inside the other's box, repeated until stable. The
/// lowest id keeps the union of the member points, with centroid and box
/// recomputed from them.
inline int merge_duplicate_objects(SceneGraph& g) {
  int merged = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<NodeId> objs;
    for (NodeId n : g.nodes_in_layer(Layer::ObjectsAgents))
      if (std::holds_alternative<ObjectAttrs>(g.node(n).attrs)) objs.push_back(n);
    for (size_t a = 0; a < objs.size() && !changed; ++a) {
      const auto& oa = std::get<ObjectAttrs>(g.node(objs[a]).attrs);
      for (size_t b = a + 1; b < objs.size() && !changed; ++b) {
        const auto& ob = std::get<ObjectAttrs>(g.node(objs[b]).attrs);
        if (oa.label != ob.label) continue;
        if (!oa.bbox.contains(ob.centroid) && !ob.bbox.contains(oa.centroid)) continue;

        ObjectAttrs keep = oa;
        keep.members.insert(keep.members.end(), ob.members.begin(), ob.members.end());
        std::sort(keep.members.begin(), keep.members.end());
        keep.members.erase(std::unique(keep.members.begin(), keep.members.end()),
                           keep.members.end());
        Vec3 c = Vec3::Zero();
        Aabb box;
        for (NodeId m : keep.members) {
          const Vec3& pm = std::get<SurfacePointAttrs>(g.node(m).attrs).position;
          c += pm;
          box.expand(pm);
        }
        keep.centroid = c / static_cast<double>(keep.members.size());
        keep.bbox = box;

        g.remove_node(objs[b]);
        g.set_attrs(objs[a], keep);
        for (NodeId m : keep.members)
          if (!g.has_edge(objs[a], m)) g.add_edge(objs[a], m);
        ++merged;
        changed = true;
      }
    }
  }
  return merged;
}

struct ReconcileReport {
  std::map<NodeId, NodeId> place_mapping;
  int objects_merged = 0;
  RoomSegmentationReport rooms;
};

/// Post-correction cleanup: collapse places and objects that the deformation
/// folded onto each other, rebuild the room layer on the merged place graph,
/// and remap the caller's edge clearance bookkeeping to the surviving ids.
inline ReconcileReport reconcile(SceneGraph& g, const RoomSegmentationParams& rooms = {},
                                 std::map<std::pair<NodeId, NodeId>, double>* clearance = nullptr,
                                 double place_merge_threshold = 0.4) {
  ReconcileReport rep;
  rep.place_mapping = merge_close_places(g, place_merge_threshold);
  if (clearance) {
    std::map<std::pair<NodeId, NodeId>, double> remapped;
    for (const auto& [key, d] : *clearance) {
      auto ia = rep.place_mapping.find(key.first);
      auto ib = rep.place_mapping.find(key.second);
      NodeId a = ia != rep.place_mapping.end() ? ia->second : key.first;
      NodeId b = ib != rep.place_mapping.end() ? ib->second : key.second;
      if (a == b) continue;
      auto k = std::minmax(a, b);
      auto [it, fresh] = remapped.insert({{k.first, k.second}, d});
      if (!fresh) it->second = std::min(it->second, d);
    }
    *clearance = std::move(remapped);
  }
  rep.objects_merged = merge_duplicate_objects(g);
  rep.rooms = segment_rooms(g, rooms, clearance);
  return rep;
}

}  // namespace atrium
