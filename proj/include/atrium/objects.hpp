#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "atrium/geometry.hpp"
#include "atrium/scene_graph.hpp"
#include "atrium/union_find.hpp"

namespace atrium {

struct ObjectParams {
  double cluster_eps = 0.25;  ///< point-to-point radius that keeps a cluster connected
  int min_points = 1;
  int min_label = 2;  ///< labels below this are structure, never objects
};

struct ObjectUpdate {
  std::vector<NodeId> created;
  std::vector<NodeId> updated;
};

namespace detail {

/// Connected components of fresh points under the eps-ball relation, via a
/// spatial hash so only nearby pairs are tested.
inline std::vector<std::vector<NodeId>> eps_components(
    const std::vector<std::pair<NodeId, Vec3>>& pts, double eps) {
  UnionFind uf(pts.size());
  std::map<CellKey, std::vector<size_t>> buckets;
  for (size_t i = 0; i < pts.size(); ++i)
    buckets[cell_of(pts[i].second, eps)].push_back(i);
  for (size_t i = 0; i < pts.size(); ++i) {
    CellKey c = cell_of(pts[i].second, eps);
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          auto it = buckets.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == buckets.end()) continue;
          for (size_t j : it->second)
            if (j > i && (pts[i].second - pts[j].second).norm() <= eps)
              uf.unite(static_cast<int>(i), static_cast<int>(j));
        }
  }
  std::map<int, std::vector<NodeId>> comps;
  for (size_t i = 0; i < pts.size(); ++i)
    comps[uf.find(static_cast<int>(i))].push_back(pts[i].first);
  std::vector<std::vector<NodeId>> out;
  for (auto& [_, members] : comps) {
    std::sort(members.begin(), members.end());
    out.push_back(std::move(members));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

}  // namespace detail

/// Cluster freshly added labeled surface points into objects and fold each
/// cluster into an existing same-label object when either centroid lies in the
/// other's bounding box; otherwise a new object node is added. Points become
/// children of their object.
inline ObjectUpdate update_objects(SceneGraph& g, const std::vector<NodeId>& fresh,
                                   const ObjectParams& p = {}) {
  ObjectUpdate out;
  std::map<int32_t, std::vector<std::pair<NodeId, Vec3>>> by_label;
  for (NodeId n : fresh) {
    const auto* a = std::get_if<SurfacePointAttrs>(&g.node(n).attrs);
    if (!a || a->label < p.min_label) continue;
    by_label[a->label].push_back({n, a->position});
  }

  for (auto& [label, pts] : by_label) {
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& members : detail::eps_components(pts, p.cluster_eps)) {
      if (static_cast<int>(members.size()) < p.min_points) continue;
      Aabb box;
      Vec3 centroid = Vec3::Zero();
      for (NodeId m : members) {
        const auto& a = std::get<SurfacePointAttrs>(g.node(m).attrs);
        box.expand(a.position);
        centroid += a.position;
      }
      centroid /= double(members.size());

      NodeId target = kInvalidNode;
      for (NodeId obj : g.nodes_in_layer(Layer::ObjectsAgents)) {
        const auto* oa = std::get_if<ObjectAttrs>(&g.node(obj).attrs);
        if (!oa || oa->label != label) continue;
        if (oa->bbox.contains(centroid) || box.contains(oa->centroid)) {
          target = obj;
          break;  // layer listing is id-ordered, first hit is the lowest id
        }
      }

      if (target == kInvalidNode) {
        ObjectAttrs oa;
        oa.label = label;
        oa.centroid = centroid;
        oa.bbox = box;
        oa.members = members;
        target = g.add_node(Layer::ObjectsAgents, oa);
        out.created.push_back(target);
      } else {
        auto oa = std::get<ObjectAttrs>(g.node(target).attrs);
        for (NodeId m : members) oa.members.push_back(m);
        std::sort(oa.members.begin(), oa.members.end());
        oa.members.erase(std::unique(oa.members.begin(), oa.members.end()),
                         oa.members.end());
        Aabb nb;
        Vec3 nc = Vec3::Zero();
        for (NodeId m : oa.members) {
          const auto& a = std::get<SurfacePointAttrs>(g.node(m).attrs);
          nb.expand(a.position);
          nc += a.position;
        }
        oa.centroid = nc / double(oa.members.size());
        oa.bbox = nb;
        g.set_attrs(target, oa);
        if (std::find(out.created.begin(), out.created.end(), target) ==
            out.created.end())
          out.updated.push_back(target);
      }
      for (NodeId m : members) g.add_edge(m, target);
    }
  }
  std::sort(out.updated.begin(), out.updated.end());
  out.updated.erase(std::unique(out.updated.begin(), out.updated.end()),
                    out.updated.end());
  return out;
}

}  // namespace atrium
