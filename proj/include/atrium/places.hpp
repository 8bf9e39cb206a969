#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "atrium/geometry.hpp"
#include "atrium/gvd.hpp"
#include "atrium/voxel_grid.hpp"

namespace atrium {

/// A group of GVD voxels that share one spatial-hash cell and are mutually
/// connected through same-cell 26-adjacency. One cluster becomes one place.
struct PlaceCluster {
  int id = -1;
  CellKey hash{0, 0, 0};
  std::set<size_t> voxels;  ///< full-grid linear indices
};

/// Incremental sparsifier: maintains clusters across GVD updates so the place
/// layer evolves instead of being rebuilt per keyframe.
class PlaceClustering {
 public:
  explicit PlaceClustering(double cell_size = 1.0) : cell_size_(cell_size) {
    if (cell_size <= 0) throw std::invalid_argument("hash cell size must be positive");
  }

  struct UpdateResult {
    std::set<int> touched;  ///< clusters created, grown, or that absorbed another
    std::set<int> retired;  ///< cluster ids that no longer exist
  };

  double cell_size() const { return cell_size_; }
  const std::map<int, PlaceCluster>& clusters() const { return clusters_; }

  int cluster_of(size_t voxel) const {
    auto it = voxel_cluster_.find(voxel);
    return it == voxel_cluster_.end() ? -1 : it->second;
  }

  /// Drop voxels that left the GVD. Any cluster losing a voxel dissolves; its
  /// surviving voxels are returned so the caller re-inserts them (components
  /// may have split).
  std::vector<size_t> remove_voxels(const std::vector<size_t>& gone, UpdateResult& r) {
    std::set<int> dirty;
    for (size_t v : gone) {
      auto it = voxel_cluster_.find(v);
      if (it == voxel_cluster_.end()) continue;
      dirty.insert(it->second);
      clusters_.at(it->second).voxels.erase(v);
      voxel_cluster_.erase(it);
    }
    std::vector<size_t> orphaned;
    for (int c : dirty) {
      auto& cl = clusters_.at(c);
      for (size_t v : cl.voxels) {
        orphaned.push_back(v);
        voxel_cluster_.erase(v);
      }
      clusters_.erase(c);
      r.retired.insert(c);
      r.touched.erase(c);
    }
    std::sort(orphaned.begin(), orphaned.end());
    return orphaned;
  }

  /// Insert updated GVD voxels: join a same-hash neighboring cluster or start
  /// a new one, then merge same-hash clusters that touch (lowest id survives).
  void insert(const VoxelGrid& g, const std::map<size_t, GvdVoxel>& live,
              const std::vector<size_t>& updated, UpdateResult& r) {
    std::vector<size_t> fresh = updated;
    std::sort(fresh.begin(), fresh.end());
    fresh.erase(std::unique(fresh.begin(), fresh.end()), fresh.end());

    for (size_t v : fresh) {
      if (!live.count(v)) continue;
      auto existing = voxel_cluster_.find(v);
      if (existing != voxel_cluster_.end()) {
        r.touched.insert(existing->second);
        continue;
      }
      CellKey h = cell_of(live.at(v).position, cell_size_);
      int join = -1;
      for (size_t n : neighbors26(g, v)) {
        auto it = voxel_cluster_.find(n);
        if (it == voxel_cluster_.end()) continue;
        const PlaceCluster& c = clusters_.at(it->second);
        if (c.hash == h && (join < 0 || it->second < join)) join = it->second;
      }
      if (join < 0) {
        join = next_id_++;
        clusters_[join] = PlaceCluster{join, h, {}};
      }
      clusters_.at(join).voxels.insert(v);
      voxel_cluster_[v] = join;
      r.touched.insert(join);
    }

    for (size_t v : fresh) {
      auto vit = voxel_cluster_.find(v);
      if (vit == voxel_cluster_.end()) continue;
      for (size_t n : neighbors26(g, v)) {
        auto nit = voxel_cluster_.find(n);
        if (nit == voxel_cluster_.end()) continue;
        int a = voxel_cluster_.at(v), b = nit->second;
        if (a == b) continue;
        if (clusters_.at(a).hash == clusters_.at(b).hash) merge(a, b, r);
      }
    }
  }

  /// Representative voxel of a cluster: most basis points, ties to the lowest
  /// linear index.
  size_t representative(int cluster, const std::map<size_t, GvdVoxel>& live) const {
    const auto& cl = clusters_.at(cluster);
    if (cl.voxels.empty()) throw std::logic_error("empty place cluster");
    size_t best = *cl.voxels.begin();
    size_t best_n = live.count(best) ? live.at(best).basis_points.size() : 0;
    for (size_t v : cl.voxels) {
      size_t n = live.count(v) ? live.at(v).basis_points.size() : 0;
      if (n > best_n) {
        best = v;
        best_n = n;
      }
    }
    return best;
  }

  /// Cross-cluster adjacency touching any cluster in `which`. Edge clearance
  /// is the smallest voxel clearance among the contributing pairs.
  std::map<std::pair<int, int>, double> edges_of(const VoxelGrid& g,
                                                 const std::map<size_t, GvdVoxel>& live,
                                                 const std::set<int>& which) const {
    std::map<std::pair<int, int>, double> out;
    for (int c : which) {
      auto it = clusters_.find(c);
      if (it == clusters_.end()) continue;
      for (size_t v : it->second.voxels)
        for (size_t n : neighbors26(g, v)) {
          auto nit = voxel_cluster_.find(n);
          if (nit == voxel_cluster_.end() || nit->second == c) continue;
          auto key = std::minmax(c, nit->second);
          double clearance =
              std::min(live.count(v) ? live.at(v).distance : 0.0,
                       live.count(n) ? live.at(n).distance : 0.0);
          auto [eit, inserted] = out.try_emplace({key.first, key.second}, clearance);
          if (!inserted) eit->second = std::min(eit->second, clearance);
        }
    }
    return out;
  }

 private:
  static std::vector<size_t> neighbors26(const VoxelGrid& g, size_t v) {
    std::vector<size_t> out;
    out.reserve(26);
    VoxelIndex c = g.from_linear(v);
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (!dx && !dy && !dz) continue;
          VoxelIndex u{c.x + dx, c.y + dy, c.z + dz};
          if (g.in_bounds(u)) out.push_back(g.linear(u));
        }
    return out;
  }

  void merge(int a, int b, UpdateResult& r) {
    int keep = std::min(a, b), drop = std::max(a, b);
    auto& dst = clusters_.at(keep);
    auto& src = clusters_.at(drop);
    for (size_t v : src.voxels) {
      dst.voxels.insert(v);
      voxel_cluster_[v] = keep;
    }
    clusters_.erase(drop);
    r.touched.erase(drop);
    r.touched.insert(keep);
    r.retired.insert(drop);
  }

  double cell_size_;
  std::map<size_t, int> voxel_cluster_;
  std::map<int, PlaceCluster> clusters_;
  int next_id_ = 0;
};

/// One-shot sparsification of a complete GVD (used for ground-truth layers
/// and batch evaluation).
inline PlaceClustering cluster_places(const VoxelGrid& g,
                                      const std::map<size_t, GvdVoxel>& gvd,
                                      double cell_size = 1.0) {
  PlaceClustering pc(cell_size);
  std::vector<size_t> all;
  all.reserve(gvd.size());
  for (const auto& [v, _] : gvd) all.push_back(v);
  PlaceClustering::UpdateResult r;
  pc.insert(g, gvd, all, r);
  return pc;
}

}  // namespace atrium
