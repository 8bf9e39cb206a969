#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "atrium/descriptors.hpp"
#include "atrium/gvd.hpp"
#include "atrium/scene_graph.hpp"
#include "atrium/se3.hpp"
#include "atrium/trajectory.hpp"
#include "atrium/voxel_grid.hpp"
#include "atrium/world.hpp"

namespace atrium {

struct ObjectSample {
  Vec3 position = Vec3::Zero();
  int label = 0;
};

struct ObjectMetrics {
  std::optional<double> found_pct;    ///< GT objects with a same-label estimate nearby
  std::optional<double> correct_pct;  ///< estimates with a same-label GT nearby
};

inline ObjectMetrics object_metrics(const std::vector<ObjectSample>& est,
                                    const std::vector<ObjectSample>& gt,
                                    double dist_threshold = 0.5) {
  if (dist_threshold <= 0.0) throw std::invalid_argument("distance threshold must be positive");
  auto has_match = [&](const ObjectSample& a, const std::vector<ObjectSample>& pool) {
    for (const auto& b : pool)
      if (a.label == b.label && (a.position - b.position).norm() <= dist_threshold) return true;
    return false;
  };
  ObjectMetrics out;
  if (!gt.empty()) {
    int found = 0;
    for (const auto& g : gt) found += has_match(g, est) ? 1 : 0;
    out.found_pct = 100.0 * found / static_cast<double>(gt.size());
  }
  if (!est.empty()) {
    int correct = 0;
    for (const auto& e : est) correct += has_match(e, gt) ? 1 : 0;
    out.correct_pct = 100.0 * correct / static_cast<double>(est.size());
  }
  return out;
}

inline std::vector<ObjectSample> object_samples(const SceneGraph& g) {
  std::vector<ObjectSample> out;
  for (NodeId n : g.nodes_in_layer(Layer::ObjectsAgents))
    if (const auto* o = std::get_if<ObjectAttrs>(&g.node(n).attrs))
      out.push_back({o->centroid, o->label});
  return out;
}

inline std::vector<ObjectSample> object_samples(const World& w) {
  std::vector<ObjectSample> out;
  for (const auto& o : w.objects) out.push_back({o.box.center(), o.label});
  return out;
}

/// Mean distance from each estimated place to the nearest voxel of the
/// reference skeleton (exhaustive nearest lookup).
inline double place_position_error(const std::vector<Vec3>& places,
                                   const std::map<size_t, GvdVoxel>& gt_gvd) {
  if (gt_gvd.empty()) throw std::invalid_argument("reference skeleton is empty");
  if (places.empty()) return 0.0;
  double total = 0.0;
  for (const Vec3& p : places) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [_, v] : gt_gvd) best = std::min(best, (v.position - p).norm());
    total += best;
  }
  return total / static_cast<double>(places.size());
}

inline std::vector<Vec3> place_positions(const SceneGraph& g) {
  std::vector<Vec3> out;
  for (NodeId n : g.nodes_in_layer(Layer::Places))
    out.push_back(std::get<PlaceAttrs>(g.node(n).attrs).position);
  return out;
}

struct RoomPr {
  double precision = 0.0;
  double recall = 0.0;
};

/// Voxel-overlap precision/recall between two room partitions:
///   precision = (1/|Re|) sum_e max_g |e n g| / |e|
///   recall    = (1/|Rg|) sum_g max_e |e n g| / |g|
/// Rooms are free-voxel index sets; empty rooms on either side are an error.
inline RoomPr room_pr(const std::vector<std::set<size_t>>& est,
                      const std::vector<std::set<size_t>>& gt) {
  if (est.empty() || gt.empty()) throw std::invalid_argument("room sets must be non-empty");
  auto overlap = [](const std::set<size_t>& a, const std::set<size_t>& b) {
    size_t n = 0;
    for (size_t v : a) n += b.count(v);
    return static_cast<double>(n);
  };
  RoomPr out;
  for (const auto& e : est) {
    if (e.empty()) throw std::invalid_argument("empty estimated room");
    double best = 0.0;
    for (const auto& g : gt) best = std::max(best, overlap(e, g) / e.size());
    out.precision += best;
  }
  out.precision /= est.size();
  for (const auto& g : gt) {
    if (g.empty()) throw std::invalid_argument("empty ground-truth room");
    double best = 0.0;
    for (const auto& e : est) best = std::max(best, overlap(e, g) / g.size());
    out.recall += best;
  }
  out.recall /= gt.size();
  return out;
}

/// Estimated rooms as free-voxel sets: each member place claims the free
/// voxels inside its clearance sphere.
inline std::vector<std::set<size_t>> room_voxels_from_graph(const SceneGraph& g,
                                                            const VoxelGrid& grid) {
  std::vector<std::set<size_t>> out;
  for (NodeId room : g.nodes_in_layer(Layer::Rooms)) {
    std::set<size_t> vox;
    for (NodeId pl : g.neighbors_in_layer(room, Layer::Places)) {
      const auto& a = std::get<PlaceAttrs>(g.node(pl).attrs);
      double r = a.distance;
      VoxelIndex lo = grid.cell_at(a.position - Vec3::Constant(r));
      VoxelIndex hi = grid.cell_at(a.position + Vec3::Constant(r));
      for (int z = std::max(lo.z, 0); z <= std::min(hi.z, grid.nz() - 1); ++z)
        for (int y = std::max(lo.y, 0); y <= std::min(hi.y, grid.ny() - 1); ++y)
          for (int x = std::max(lo.x, 0); x <= std::min(hi.x, grid.nx() - 1); ++x) {
            VoxelIndex v{x, y, z};
            if (grid.state(v) != VoxelState::Free) continue;
            if ((grid.center(v) - a.position).norm() <= r) vox.insert(grid.linear(v));
          }
    }
    if (!vox.empty()) out.push_back(std::move(vox));
  }
  return out;
}

/// Ground-truth rooms as free-voxel sets, from the room id labelling of the
/// rasterized world.
inline std::vector<std::set<size_t>> room_voxels_from_world(const World& w,
                                                            const VoxelGrid& grid) {
  std::vector<int> room_of = gt_room_of_free_voxels(w, grid);
  std::map<int, std::set<size_t>> by_room;
  for (size_t i = 0; i < room_of.size(); ++i)
    if (room_of[i] >= 0) by_room[room_of[i]].insert(i);
  std::vector<std::set<size_t>> out;
  for (auto& [id, vox] : by_room) out.push_back(std::move(vox));
  return out;
}

/// Translational RMSE after rigidly aligning the first poses.
inline double ate_rmse(const Trajectory& est, const Trajectory& gt) {
  if (est.size() != gt.size()) throw std::invalid_argument("trajectory length mismatch");
  if (est.size() == 0) return 0.0;
  Se3 align = gt.poses.front() * est.poses.front().inverse();
  double sum = 0.0;
  for (size_t i = 0; i < est.size(); ++i)
    sum += ((align * est.poses[i]).t - gt.poses[i].t).squaredNorm();
  return std::sqrt(sum / static_cast<double>(est.size()));
}

/// Similarity score in [0, 1] between two descriptors: one minus the sum of
/// the three L1 distances, normalized by its maximum possible value (each
/// histogram is L1-normalized, so each distance is at most 2).
inline double descriptor_score(const HierarchicalDescriptor& a, const HierarchicalDescriptor& b) {
  double d = l1_distance(a.place_hist, b.place_hist) + l1_distance(a.object_hist, b.object_hist) +
             l1_distance(a.appearance, b.appearance);
  return 1.0 - d / 6.0;
}

/// Mean percentage of the k best-scored candidates per query whose stored
/// sub-graph boxes overlap the query's with IoU at or above the threshold.
inline double descriptor_p_at_k(const std::vector<HierarchicalDescriptor>& descs, int k,
                                double iou_threshold) {
  if (static_cast<int>(descs.size()) < k + 1)
    throw std::invalid_argument("need at least k+1 descriptors");
  double total = 0.0;
  for (size_t q = 0; q < descs.size(); ++q) {
    std::vector<std::pair<double, size_t>> scored;
    for (size_t m = 0; m < descs.size(); ++m) {
      if (m == q) continue;
      scored.push_back({-descriptor_score(descs[q], descs[m]), m});
    }
    std::sort(scored.begin(), scored.end());
    int valid = 0;
    for (int i = 0; i < k; ++i)
      if (descs[q].subgraph_bbox.iou(descs[scored[i].second].subgraph_bbox) >= iou_threshold)
        ++valid;
    total += 100.0 * valid / static_cast<double>(k);
  }
  return total / static_cast<double>(descs.size());
}

struct MetricsReport {
  std::optional<double> object_found_pct;
  std::optional<double> object_correct_pct;
  double place_position_error_mean = 0.0;
  double room_precision = 0.0;
  double room_recall = 0.0;
  double ate_rmse = 0.0;
  std::map<int, double> descriptor_p_at_k;
  std::map<std::string, uint64_t> memory_symbols;  ///< per memory mode
  std::map<std::string, double> runtimes_ms;       ///< per pipeline stage
};

inline std::string to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["object_found_pct"] = r.object_found_pct ? nlohmann::json(*r.object_found_pct)
                                             : nlohmann::json(nullptr);
  j["object_correct_pct"] = r.object_correct_pct ? nlohmann::json(*r.object_correct_pct)
                                                 : nlohmann::json(nullptr);
  j["place_position_error_mean"] = r.place_position_error_mean;
  j["room_precision"] = r.room_precision;
  j["room_recall"] = r.room_recall;
  j["ate_rmse"] = r.ate_rmse;
  nlohmann::json pk = nlohmann::json::object();
  for (const auto& [k, v] : r.descriptor_p_at_k) pk[std::to_string(k)] = v;
  j["descriptor_p_at_k"] = pk;
  nlohmann::json mem = nlohmann::json::object();
  for (const auto& [mode, v] : r.memory_symbols) mem[mode] = v;
  j["memory_symbols"] = mem;
  nlohmann::json rt = nlohmann::json::object();
  for (const auto& [stage, v] : r.runtimes_ms) rt[stage] = v;
  j["runtimes_ms"] = rt;
  return j.dump(2) + "\n";
}

/// One header line plus one value line, for sweep aggregation.
inline std::string to_csv(const MetricsReport& r) {
  std::ostringstream head, row;
  auto emit = [&](const std::string& name, const std::string& value) {
    if (head.tellp() > 0) {
      head << ',';
      row << ',';
    }
    head << name;
    row << value;
  };
  auto num = [](double v) {
    std::ostringstream s;
    s << v;
    return s.str();
  };
  emit("object_found_pct", r.object_found_pct ? num(*r.object_found_pct) : "NA");
  emit("object_correct_pct", r.object_correct_pct ? num(*r.object_correct_pct) : "NA");
  emit("place_position_error_mean", num(r.place_position_error_mean));
  emit("room_precision", num(r.room_precision));
  emit("room_recall", num(r.room_recall));
  emit("ate_rmse", num(r.ate_rmse));
  for (const auto& [k, v] : r.descriptor_p_at_k) emit("p_at_" + std::to_string(k), num(v));
  for (const auto& [mode, v] : r.memory_symbols) emit("memory_" + mode, std::to_string(v));
  for (const auto& [stage, v] : r.runtimes_ms) emit("runtime_ms_" + stage, num(v));
  return head.str() + "\n" + row.str() + "\n";
}

}  // namespace atrium
