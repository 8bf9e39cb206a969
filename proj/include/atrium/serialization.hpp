#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "atrium/htree.hpp"
#include "atrium/scene_graph.hpp"
#include "atrium/tree_decomposition.hpp"

namespace atrium {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// 17 significant digits: enough to round-trip any double exactly.
inline std::string fmt(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite value in serialization");
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt(const Vec3& v) {
  return "[" + fmt(v.x()) + "," + fmt(v.y()) + "," + fmt(v.z()) + "]";
}

inline Vec3 vec3_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("expected 3-element array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace detail

/// Scene graphs serialize with nodes ascending by id and canonical edge
/// order, so equal graphs produce byte-identical output.
inline std::string to_json(const SceneGraph& g) {
  using detail::fmt;
  std::ostringstream os;
  os << "{\n\"version\": 1,\n\"nodes\": [\n";
  bool first = true;
  for (const auto& [id, node] : g.nodes()) {
    if (!first) os << ",\n";
    first = false;
    os << "{\"id\": " << id << ", \"layer\": " << layer_index(node.layer);
    if (const auto* sp = std::get_if<SurfacePointAttrs>(&node.attrs)) {
      os << ", \"type\": \"surface_point\", \"position\": " << fmt(sp->position)
         << ", \"label\": " << sp->label
         << ", \"landmark_id\": " << sp->landmark_id
         << ", \"first_keyframe\": " << sp->first_keyframe;
    } else if (const auto* ob = std::get_if<ObjectAttrs>(&node.attrs)) {
      os << ", \"type\": \"object\", \"centroid\": " << fmt(ob->centroid)
         << ", \"label\": " << ob->label;
      if (ob->bbox.empty())
        os << ", \"bbox\": null";
      else
        os << ", \"bbox\": [" << fmt(ob->bbox.min) << "," << fmt(ob->bbox.max) << "]";
      os << ", \"members\": [";
      for (size_t i = 0; i < ob->members.size(); ++i)
        os << (i ? "," : "") << ob->members[i];
      os << "]";
    } else if (const auto* ag = std::get_if<AgentAttrs>(&node.attrs)) {
      os << ", \"type\": \"agent\", \"translation\": " << fmt(ag->pose.t)
         << ", \"rotation\": [" << fmt(ag->pose.q.w()) << "," << fmt(ag->pose.q.x())
         << "," << fmt(ag->pose.q.y()) << "," << fmt(ag->pose.q.z()) << "]"
         << ", \"keyframe\": " << ag->keyframe << ", \"appearance\": [";
      bool f2 = true;
      for (const auto& [lm, w] : ag->appearance) {
        os << (f2 ? "" : ",") << "[" << lm << "," << fmt(w) << "]";
        f2 = false;
      }
      os << "]";
    } else if (const auto* pl = std::get_if<PlaceAttrs>(&node.attrs)) {
      os << ", \"type\": \"place\", \"position\": " << fmt(pl->position)
         << ", \"distance\": " << fmt(pl->distance)
         << ", \"num_basis_points\": " << pl->num_basis_points
         << ", \"basis_points\": [";
      for (size_t i = 0; i < pl->basis_points.size(); ++i)
        os << (i ? "," : "") << fmt(pl->basis_points[i]);
      os << "]";
    } else if (const auto* rm = std::get_if<RoomAttrs>(&node.attrs)) {
      os << ", \"type\": \"room\", \"centroid\": " << fmt(rm->centroid);
    } else {
      os << ", \"type\": \"building\", \"centroid\": "
         << fmt(std::get<BuildingAttrs>(node.attrs).centroid);
    }
    os << "}";
  }
  os << "\n],\n\"edges\": [";
  auto edges = g.edges();
  for (size_t i = 0; i < edges.size(); ++i)
    os << (i ? "," : "") << "[" << edges[i].first << "," << edges[i].second << "]";
  os << "]\n}\n";
  return os.str();
}

inline SceneGraph scene_graph_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("scene graph parse error: ") + e.what());
  }
  try {
    if (j.at("version").get<int>() != 1) throw ParseError("unsupported version");
    SceneGraph g;
    for (const auto& n : j.at("nodes")) {
      NodeId id = n.at("id").get<NodeId>();
      Layer layer = layer_from_index(n.at("layer").get<int>());
      std::string type = n.at("type").get<std::string>();
      NodeAttrs attrs;
      if (type == "surface_point") {
        SurfacePointAttrs a;
        a.position = detail::vec3_from(n.at("position"));
        a.label = n.at("label").get<int>();
        a.landmark_id = n.at("landmark_id").get<int64_t>();
        if (n.contains("first_keyframe"))
          a.first_keyframe = n.at("first_keyframe").get<int64_t>();
        attrs = a;
      } else if (type == "object") {
        ObjectAttrs a;
        a.centroid = detail::vec3_from(n.at("centroid"));
        a.label = n.at("label").get<int>();
        if (!n.at("bbox").is_null()) {
          a.bbox.min = detail::vec3_from(n.at("bbox")[0]);
          a.bbox.max = detail::vec3_from(n.at("bbox")[1]);
        }
        for (const auto& m : n.at("members")) a.members.push_back(m.get<NodeId>());
        attrs = a;
      } else if (type == "agent") {
        AgentAttrs a;
        a.pose.t = detail::vec3_from(n.at("translation"));
        const auto& q = n.at("rotation");
        a.pose.q = Eigen::Quaterniond(q[0].get<double>(), q[1].get<double>(),
                                      q[2].get<double>(), q[3].get<double>());
        a.keyframe = n.at("keyframe").get<int64_t>();
        for (const auto& e : n.at("appearance"))
          a.appearance[e[0].get<int64_t>()] = e[1].get<double>();
        attrs = a;
      } else if (type == "place") {
        PlaceAttrs a;
        a.position = detail::vec3_from(n.at("position"));
        a.distance = n.at("distance").get<double>();
        a.num_basis_points = n.at("num_basis_points").get<int>();
        for (const auto& b : n.at("basis_points"))
          a.basis_points.push_back(detail::vec3_from(b));
        attrs = a;
      } else if (type == "room") {
        RoomAttrs a;
        a.centroid = detail::vec3_from(n.at("centroid"));
        attrs = a;
      } else if (type == "building") {
        BuildingAttrs a;
        a.centroid = detail::vec3_from(n.at("centroid"));
        attrs = a;
      } else {
        throw ParseError("unknown node type: " + type);
      }
      g.add_node_with_id(id, layer, std::move(attrs));
    }
    for (const auto& e : j.at("edges"))
      g.add_edge(e[0].get<NodeId>(), e[1].get<NodeId>());
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scene graph schema error: ") + e.what());
  }
}

inline std::string to_json(const TreeDecomposition& td) {
  std::ostringstream os;
  os << "{\n\"version\": 1,\n\"bags\": [\n";
  for (size_t k = 0; k < td.bags.size(); ++k) {
    os << (k ? ",\n" : "") << "{\"id\": " << k << ", \"nodes\": [";
    for (size_t i = 0; i < td.bags[k].nodes.size(); ++i)
      os << (i ? "," : "") << td.bags[k].nodes[i];
    os << "]}";
  }
  os << "\n],\n\"tree_edges\": [";
  for (size_t i = 0; i < td.tree_edges.size(); ++i)
    os << (i ? "," : "") << "[" << td.tree_edges[i].first << ","
       << td.tree_edges[i].second << "]";
  os << "],\n\"width\": " << td.width() << "\n}\n";
  return os.str();
}

inline TreeDecomposition td_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("decomposition parse error: ") + e.what());
  }
  try {
    TreeDecomposition td;
    for (const auto& b : j.at("bags")) {
      Bag bag;
      for (const auto& v : b.at("nodes")) bag.nodes.push_back(v.get<NodeId>());
      td.bags.push_back(std::move(bag));
    }
    for (const auto& e : j.at("tree_edges"))
      td.tree_edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    return td;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("decomposition schema error: ") + e.what());
  }
}

inline std::string to_json(const HTree& ht) {
  std::ostringstream os;
  os << "{\n\"version\": 1,\n\"nodes\": [\n";
  for (size_t k = 0; k < ht.nodes.size(); ++k) {
    const auto& n = ht.nodes[k];
    os << (k ? ",\n" : "") << "{\"id\": " << n.id << ", \"kind\": \""
       << (n.kind == HTreeNode::Kind::Leaf ? "leaf" : "clique")
       << "\", \"members\": [";
    for (size_t i = 0; i < n.members.size(); ++i)
      os << (i ? "," : "") << n.members[i];
    os << "]}";
  }
  os << "\n],\n\"edges\": [";
  for (size_t i = 0; i < ht.edges.size(); ++i)
    os << (i ? "," : "") << "[" << ht.edges[i].first << "," << ht.edges[i].second << "]";
  os << "]\n}\n";
  return os.str();
}

inline void save_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << content;
  if (!f) throw std::runtime_error("write failed: " + path);
}

inline std::string load_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace atrium
