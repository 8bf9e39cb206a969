#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "atrium/geometry.hpp"
#include "atrium/loop_closure.hpp"
#include "atrium/scene_graph.hpp"
#include "atrium/se3.hpp"
#include "atrium/union_find.hpp"

namespace atrium {

enum class DefEdgeFamily { Odometry, MeshMesh, PlacePlace, AgentMesh, AgentPlace, PlaceMesh, Closure };

/// One directed relative-pose measurement between deformation nodes.
/// Rotation and translation rows of the matrix residual are weighted
/// separately; a zero rotation weight makes the edge position-only.
struct DefEdge {
  NodeId i = 0, j = 0;
  Se3 measurement;  ///< E_ij, the pose of j expressed in i's frame
  double rot_weight = 0.0;
  double trans_weight = 1.0;
  DefEdgeFamily family = DefEdgeFamily::MeshMesh;
};

enum class DefNodeKind { Agent, ControlPoint, Place };

struct DefNode {
  DefNodeKind kind = DefNodeKind::ControlPoint;
  Se3 pose;  ///< initial value; identity rotation for control points and places
};

struct DeformationGraph {
  std::map<NodeId, DefNode> nodes;  ///< keyed by the scene node id
  std::vector<DefEdge> edges;
  std::map<NodeId, std::vector<NodeId>> control_members;  ///< control -> mesh nodes
  NodeId gauge = kInvalidNode;  ///< first agent, held fixed
};

struct DeformationGraphParams {
  double subsample_resolution = 1.0;  ///< mesh control point spacing
  double edge_radius = 2.5;           ///< control pairs closer than this get an edge
  double omega_t = 1.0;               ///< deformation stiffness (position rows)
  double odom_rot_weight = 10.0, odom_trans_weight = 10.0;
};

class DisconnectedGraphError : public std::runtime_error {
 public:
  DisconnectedGraphError(std::string msg, std::vector<std::vector<NodeId>> comps)
      : std::runtime_error(std::move(msg)), components(std::move(comps)) {}
  std::vector<std::vector<NodeId>> components;
};

/// Assemble the deformation graph: agent poses chained by odometry, mesh
/// control points from a uniform spatial subsample (lowest node id per cell),
/// place nodes, and the six edge families. All measurements come from the
/// current (odometric) node values, so the initial cost is zero.
inline DeformationGraph build_deformation_graph(const SceneGraph& g,
                                                const DeformationGraphParams& p = {}) {
  DeformationGraph dg;

  // agents ordered by keyframe
  std::vector<std::pair<int64_t, NodeId>> agents;
  for (NodeId n : g.nodes_in_layer(Layer::ObjectsAgents))
    if (const auto* a = std::get_if<AgentAttrs>(&g.node(n).attrs))
      agents.push_back({a->keyframe, n});
  std::sort(agents.begin(), agents.end());
  if (agents.empty()) throw std::invalid_argument("deformation graph needs an agent pose");
  dg.gauge = agents.front().second;

  std::map<int64_t, NodeId> agent_of_keyframe;
  for (auto [kf, n] : agents) {
    dg.nodes[n] = {DefNodeKind::Agent, std::get<AgentAttrs>(g.node(n).attrs).pose};
    agent_of_keyframe[kf] = n;
  }
  for (size_t k = 1; k < agents.size(); ++k) {
    const Se3& Ti = dg.nodes.at(agents[k - 1].second).pose;
    const Se3& Tj = dg.nodes.at(agents[k].second).pose;
    dg.edges.push_back({agents[k - 1].second, agents[k].second, Ti.inverse() * Tj,
                        p.odom_rot_weight, p.odom_trans_weight,
                        DefEdgeFamily::Odometry});
  }

  // mesh control points: lowest node id per subsample cell
  std::map<CellKey, NodeId> rep;
  std::map<CellKey, std::vector<NodeId>> cell_members;
  for (NodeId n : g.nodes_in_layer(Layer::Mesh)) {
    const auto& a = std::get<SurfacePointAttrs>(g.node(n).attrs);
    CellKey c = cell_of(a.position, p.subsample_resolution);
    auto it = rep.find(c);
    if (it == rep.end() || n < it->second) rep[c] = n;
    cell_members[c].push_back(n);
  }
  std::map<CellKey, NodeId> control_of_cell;
  for (const auto& [c, n] : rep) {
    Se3 T;
    T.t = std::get<SurfacePointAttrs>(g.node(n).attrs).position;
    dg.nodes[n] = {DefNodeKind::ControlPoint, T};
    control_of_cell[c] = n;
    dg.control_members[n] = cell_members.at(c);
  }

  // mesh-mesh edges: both directions so each endpoint's rotation is observable
  {
    std::vector<NodeId> cps;
    for (const auto& [c, n] : control_of_cell) cps.push_back(n);
    std::sort(cps.begin(), cps.end());
    std::map<CellKey, std::vector<NodeId>> hash;
    for (NodeId n : cps) hash[cell_of(dg.nodes.at(n).pose.t, p.edge_radius)].push_back(n);
    for (NodeId n : cps) {
      Vec3 pn = dg.nodes.at(n).pose.t;
      CellKey c = cell_of(pn, p.edge_radius);
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            auto it = hash.find({c.x + dx, c.y + dy, c.z + dz});
            if (it == hash.end()) continue;
            for (NodeId m : it->second) {
              if (m == n) continue;
              Vec3 pm = dg.nodes.at(m).pose.t;
              if ((pm - pn).norm() > p.edge_radius) continue;
              Se3 E;
              E.t = pm - pn;  // identity rotations: relative position
              dg.edges.push_back({n, m, E, 0.0, p.omega_t, DefEdgeFamily::MeshMesh});
            }
          }
    }
  }

  // place nodes + MST over the place-place scene edges (Kruskal by length)
  std::vector<NodeId> places(g.nodes_in_layer(Layer::Places).begin(),
                             g.nodes_in_layer(Layer::Places).end());
  for (NodeId n : places) {
    Se3 T;
    T.t = std::get<PlaceAttrs>(g.node(n).attrs).position;
    dg.nodes[n] = {DefNodeKind::Place, T};
  }
  {
    struct Cand {
      double len;
      NodeId a, b;
    };
    std::vector<Cand> cands;
    for (auto [a, b] : g.edges())
      if (g.node(a).layer == Layer::Places && g.node(b).layer == Layer::Places)
        cands.push_back({(dg.nodes.at(a).pose.t - dg.nodes.at(b).pose.t).norm(), a, b});
    std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
      if (x.len != y.len) return x.len < y.len;
      return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });
    std::map<NodeId, int> pidx;
    for (NodeId n : places) pidx[n] = static_cast<int>(pidx.size());
    UnionFind uf(places.size());
    for (const auto& c : cands) {
      if (!uf.unite(pidx.at(c.a), pidx.at(c.b))) continue;
      Se3 Eab;
      Eab.t = dg.nodes.at(c.b).pose.t - dg.nodes.at(c.a).pose.t;
      dg.edges.push_back({c.a, c.b, Eab, 0.0, p.omega_t, DefEdgeFamily::PlacePlace});
      Se3 Eba;
      Eba.t = -Eab.t;
      dg.edges.push_back({c.b, c.a, Eba, 0.0, p.omega_t, DefEdgeFamily::PlacePlace});
    }
  }

  // agent -> control point it first observed: one anchor per control,
  // from the earliest keyframe among the member points
  for (const auto& [control, members] : dg.control_members) {
    int64_t first = -1;
    for (NodeId m : members) {
      const auto& a = std::get<SurfacePointAttrs>(g.node(m).attrs);
      if (a.first_keyframe < 0 || !agent_of_keyframe.count(a.first_keyframe)) continue;
      if (first < 0 || a.first_keyframe < first) first = a.first_keyframe;
    }
    if (first >= 0) {
      NodeId agent = agent_of_keyframe.at(first);
      const Se3& Ta = dg.nodes.at(agent).pose;
      Se3 E = Ta.inverse() * dg.nodes.at(control).pose;
      dg.edges.push_back({agent, control, E, 0.0, p.omega_t, DefEdgeFamily::AgentMesh});
    }
  }

  // agent -> parent place (the scene edge)
  for (auto [kf, n] : agents) {
    for (NodeId pl : g.neighbors_in_layer(n, Layer::Places)) {
      Se3 E = dg.nodes.at(n).pose.inverse() * dg.nodes.at(pl).pose;
      dg.edges.push_back({n, pl, E, 0.0, p.omega_t, DefEdgeFamily::AgentPlace});
    }
  }

  // place -> control points at its basis points
  for (NodeId n : places) {
    const auto& pa = std::get<PlaceAttrs>(g.node(n).attrs);
    std::set<NodeId> targets;
    for (const Vec3& b : pa.basis_points) {
      auto it = control_of_cell.find(cell_of(b, p.subsample_resolution));
      if (it != control_of_cell.end()) targets.insert(it->second);
    }
    for (NodeId c : targets) {
      Se3 E;
      E.t = dg.nodes.at(c).pose.t - dg.nodes.at(n).pose.t;
      dg.edges.push_back({n, c, E, 0.0, p.omega_t, DefEdgeFamily::PlaceMesh});
    }
  }

  // connectivity over the undirected support
  {
    std::map<NodeId, int> idx;
    for (const auto& [n, _] : dg.nodes) idx[n] = static_cast<int>(idx.size());
    UnionFind uf(idx.size());
    for (const auto& e : dg.edges) uf.unite(idx.at(e.i), idx.at(e.j));
    if (uf.num_components() > 1) {
      std::map<int, std::vector<NodeId>> comps;
      for (const auto& [n, i] : idx) comps[uf.find(i)].push_back(n);
      std::vector<std::vector<NodeId>> out;
      for (auto& [r, ns] : comps) out.push_back(std::move(ns));
      std::ostringstream msg;
      msg << "deformation graph split into " << out.size() << " components (sizes:";
      for (const auto& c : out) msg << ' ' << c.size();
      msg << ")";
      throw DisconnectedGraphError(msg.str(), std::move(out));
    }
  }
  return dg;
}

/// Wrap verified loop closures as robustified full-pose edges between agents.
inline std::vector<DefEdge> closure_edges(const std::vector<LoopClosure>& closures,
                                          double rot_weight = 10.0,
                                          double trans_weight = 10.0) {
  std::vector<DefEdge> out;
  for (const auto& lc : closures)
    out.push_back({lc.query, lc.match, lc.relative_pose, rot_weight, trans_weight,
                   DefEdgeFamily::Closure});
  return out;
}

}  // namespace atrium
