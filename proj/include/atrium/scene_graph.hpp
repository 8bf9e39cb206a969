#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "atrium/geometry.hpp"
#include "atrium/se3.hpp"

namespace atrium {

using NodeId = uint64_t;
constexpr NodeId kInvalidNode = static_cast<NodeId>(-1);

/// Graph layers, bottom to top.
enum class Layer : int {
  Mesh = 1,
  ObjectsAgents = 2,
  Places = 3,
  Rooms = 4,
  Building = 5,
};

inline int layer_index(Layer l) { return static_cast<int>(l); }

inline Layer layer_from_index(int i) {
  if (i < 1 || i > 5) throw std::invalid_argument("layer index out of range: " + std::to_string(i));
  return static_cast<Layer>(i);
}

struct SurfacePointAttrs {
  Vec3 position = Vec3::Zero();
  int label = 0;
  int64_t landmark_id = -1;   // source object in the world, -1 for structure
  int64_t first_keyframe = -1;  // keyframe that first observed this point
};

struct ObjectAttrs {
  Vec3 centroid = Vec3::Zero();
  Aabb bbox;
  int label = 0;
  std::vector<NodeId> members;  // layer-1 points, sorted
};

struct AgentAttrs {
  Se3 pose;
  int64_t keyframe = 0;
  std::map<int64_t, double> appearance;  // normalized bag of landmark ids
};

struct PlaceAttrs {
  Vec3 position = Vec3::Zero();
  double distance = 0.0;  // clearance to nearest obstacle
  int num_basis_points = 0;
  std::vector<Vec3> basis_points;
};

struct RoomAttrs {
  Vec3 centroid = Vec3::Zero();
};

struct BuildingAttrs {
  Vec3 centroid = Vec3::Zero();
};

using NodeAttrs = std::variant<SurfacePointAttrs, ObjectAttrs, AgentAttrs,
                               PlaceAttrs, RoomAttrs, BuildingAttrs>;

inline bool attrs_match_layer(const NodeAttrs& attrs, Layer layer) {
  switch (layer) {
    case Layer::Mesh: return std::holds_alternative<SurfacePointAttrs>(attrs);
    case Layer::ObjectsAgents:
      return std::holds_alternative<ObjectAttrs>(attrs) ||
             std::holds_alternative<AgentAttrs>(attrs);
    case Layer::Places: return std::holds_alternative<PlaceAttrs>(attrs);
    case Layer::Rooms: return std::holds_alternative<RoomAttrs>(attrs);
    case Layer::Building: return std::holds_alternative<BuildingAttrs>(attrs);
  }
  return false;
}

/// Representative position of a node, used for metrics and deformation.
inline Vec3 node_position(const NodeAttrs& attrs) {
  if (const auto* p = std::get_if<SurfacePointAttrs>(&attrs)) return p->position;
  if (const auto* o = std::get_if<ObjectAttrs>(&attrs)) return o->centroid;
  if (const auto* a = std::get_if<AgentAttrs>(&attrs)) return a->pose.t;
  if (const auto* pl = std::get_if<PlaceAttrs>(&attrs)) return pl->position;
  if (const auto* r = std::get_if<RoomAttrs>(&attrs)) return r->centroid;
  return std::get<BuildingAttrs>(attrs).centroid;
}

struct Node {
  NodeId id = 0;
  Layer layer = Layer::Mesh;
  NodeAttrs attrs;
};

struct HierarchyViolation {
  enum class Kind { MultipleParents, Locality, SharedChildEdge };
  Kind kind;
  NodeId a = 0;  // offending node (or one edge endpoint)
  NodeId b = 0;  // second endpoint or second parent
  std::string detail;
};

struct HierarchyReport {
  std::vector<HierarchyViolation> violations;
  bool ok() const { return violations.empty(); }
};

class LayerMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class LocalityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Five-layer scene graph. Node ids are assigned monotonically and never
/// reused. Copies share storage until written (cheap snapshots); a graph
/// instance may be mutated by one thread while snapshots are read by others.
class SceneGraph {
 public:
  SceneGraph() : data_(std::make_shared<Data>()) {}

  NodeId add_node(Layer layer, NodeAttrs attrs) {
    if (!attrs_match_layer(attrs, layer))
      throw LayerMismatchError("node attrs do not match layer " +
                               std::to_string(layer_index(layer)));
    Data& d = mut();
    NodeId id = d.next_id++;
    d.nodes.emplace(id, Node{id, layer, std::move(attrs)});
    d.layers[layer].insert(id);
    d.adjacency[id];
    return id;
  }

  /// Inserts a node under a caller-chosen id (deserialization path). The id
  /// counter jumps past it so later add_node calls stay unique.
  void add_node_with_id(NodeId id, Layer layer, NodeAttrs attrs) {
    if (!attrs_match_layer(attrs, layer))
      throw LayerMismatchError("node attrs do not match layer " +
                               std::to_string(layer_index(layer)));
    if (has_node(id))
      throw std::invalid_argument("node id already used: " + std::to_string(id));
    Data& d = mut();
    d.nodes.emplace(id, Node{id, layer, std::move(attrs)});
    d.layers[layer].insert(id);
    d.adjacency[id];
    d.next_id = std::max(d.next_id, id + 1);
  }

  /// Adds an undirected edge. Duplicate insertion is a no-op. Edges may only
  /// connect nodes in the same or adjacent layers.
  void add_edge(NodeId a, NodeId b) {
    if (a == b) throw std::invalid_argument("self edge");
    const Node& na = node(a);
    const Node& nb = node(b);
    int diff = layer_index(na.layer) - layer_index(nb.layer);
    if (diff < -1 || diff > 1)
      throw LocalityError("edge between non-adjacent layers " +
                          std::to_string(layer_index(na.layer)) + " and " +
                          std::to_string(layer_index(nb.layer)));
    Data& d = mut();
    if (d.adjacency[a].insert(b).second) {
      d.adjacency[b].insert(a);
      ++d.edge_count;
    }
  }

  void remove_edge(NodeId a, NodeId b) {
    Data& d = mut();
    auto it = d.adjacency.find(a);
    if (it == d.adjacency.end() || it->second.erase(b) == 0) return;
    d.adjacency[b].erase(a);
    --d.edge_count;
  }

  void remove_node(NodeId id) {
    if (!has_node(id)) return;
    Data& d = mut();
    for (NodeId nb : d.adjacency[id]) {
      d.adjacency[nb].erase(id);
      --d.edge_count;
    }
    d.adjacency.erase(id);
    d.layers[d.nodes.at(id).layer].erase(id);
    d.nodes.erase(id);
  }

  bool has_node(NodeId id) const { return data_->nodes.count(id) > 0; }

  const Node& node(NodeId id) const {
    auto it = data_->nodes.find(id);
    if (it == data_->nodes.end())
      throw std::out_of_range("no node " + std::to_string(id));
    return it->second;
  }

  void set_attrs(NodeId id, NodeAttrs attrs) {
    const Node& n = node(id);
    if (!attrs_match_layer(attrs, n.layer))
      throw LayerMismatchError("node attrs do not match layer");
    mut().nodes.at(id).attrs = std::move(attrs);
  }

  bool has_edge(NodeId a, NodeId b) const {
    auto it = data_->adjacency.find(a);
    return it != data_->adjacency.end() && it->second.count(b) > 0;
  }

  const std::set<NodeId>& neighbors(NodeId id) const {
    auto it = data_->adjacency.find(id);
    if (it == data_->adjacency.end())
      throw std::out_of_range("no node " + std::to_string(id));
    return it->second;
  }

  std::vector<NodeId> neighbors_in_layer(NodeId id, Layer layer) const {
    std::vector<NodeId> out;
    for (NodeId nb : neighbors(id))
      if (node(nb).layer == layer) out.push_back(nb);
    return out;
  }

  /// Unique neighbor one layer up, if any. Lowest id wins when the hierarchy
  /// is ill-formed; validate_hierarchy reports that case.
  std::optional<NodeId> parent(NodeId id) const {
    int up = layer_index(node(id).layer) + 1;
    if (up > 5) return std::nullopt;
    auto ps = neighbors_in_layer(id, layer_from_index(up));
    if (ps.empty()) return std::nullopt;
    return ps.front();
  }

  std::vector<NodeId> children(NodeId id) const {
    int down = layer_index(node(id).layer) - 1;
    if (down < 1) return {};
    return neighbors_in_layer(id, layer_from_index(down));
  }

  const std::set<NodeId>& nodes_in_layer(Layer layer) const {
    static const std::set<NodeId> kEmpty;
    auto it = data_->layers.find(layer);
    return it == data_->layers.end() ? kEmpty : it->second;
  }

  const std::map<NodeId, Node>& nodes() const { return data_->nodes; }

  /// All edges as canonical (a < b) pairs, ascending.
  std::vector<std::pair<NodeId, NodeId>> edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(data_->edge_count);
    for (const auto& [id, nbs] : data_->adjacency)
      for (NodeId nb : nbs)
        if (id < nb) out.emplace_back(id, nb);
    return out;
  }

  size_t num_nodes() const { return data_->nodes.size(); }
  size_t num_edges() const { return data_->edge_count; }

  /// O(1) snapshot sharing storage with this graph. Later writes to either
  /// copy detach them.
  SceneGraph snapshot() const { return *this; }

  /// Checks the three structural hierarchy conditions: single parent,
  /// locality, and disjoint children (no intra-layer edge may join children
  /// of two different parents).
  HierarchyReport validate_hierarchy() const {
    HierarchyReport report;
    for (const auto& [id, n] : data_->nodes) {
      int up = layer_index(n.layer) + 1;
      if (up > 5) continue;
      auto ps = neighbors_in_layer(id, layer_from_index(up));
      if (ps.size() > 1)
        report.violations.push_back(
            {HierarchyViolation::Kind::MultipleParents, id, ps[1],
             std::to_string(ps.size()) + " parents for node " + std::to_string(id)});
    }
    for (const auto& [a, b] : edges()) {
      const Node& na = node(a);
      const Node& nb = node(b);
      int diff = layer_index(na.layer) - layer_index(nb.layer);
      if (diff < -1 || diff > 1) {
        report.violations.push_back({HierarchyViolation::Kind::Locality, a, b,
                                     "edge spans non-adjacent layers"});
        continue;
      }
      if (diff != 0 || na.layer == Layer::Building) continue;
      auto pa = parent(a);
      auto pb = parent(b);
      if (pa && pb && *pa != *pb)
        report.violations.push_back(
            {HierarchyViolation::Kind::SharedChildEdge, a, b,
             "intra-layer edge joins children of nodes " + std::to_string(*pa) +
                 " and " + std::to_string(*pb)});
    }
    return report;
  }

 private:
  struct Data {
    std::map<NodeId, Node> nodes;
    std::map<NodeId, std::set<NodeId>> adjacency;
    std::map<Layer, std::set<NodeId>> layers;
    size_t edge_count = 0;
    NodeId next_id = 0;
  };

  Data& mut() {
    if (data_.use_count() > 1) data_ = std::make_shared<Data>(*data_);
    return *data_;
  }

  std::shared_ptr<Data> data_;
};

}  // namespace atrium
