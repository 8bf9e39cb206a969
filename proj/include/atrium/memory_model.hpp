#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "atrium/scene_graph.hpp"

namespace atrium {

enum class MemoryModel { Flat, Hierarchical, Compressed };

struct SymbolCount {
  uint64_t symbols = 0;
  uint64_t edges = 0;
  friend bool operator==(const SymbolCount&, const SymbolCount&) = default;
};

/// Flat grid model: one full copy of the grid per label layer, no edges.
inline SymbolCount memory_flat(uint64_t voxels, int label_layers) {
  return {voxels * static_cast<uint64_t>(label_layers), 0};
}

/// Hierarchical grid model: the grid once, plus one symbol per grouping node
/// (objects, rooms, and any levels above). Each voxel points at one parent
/// and every grouping node except the single root points at one parent.
inline SymbolCount memory_hierarchical(uint64_t voxels,
                                       const std::vector<uint64_t>& grouping_counts) {
  uint64_t groups = std::accumulate(grouping_counts.begin(),
                                    grouping_counts.end(), uint64_t{0});
  SymbolCount out;
  out.symbols = voxels + groups;
  out.edges = (groups > 0 ? voxels + groups - 1 : 0);
  return out;
}

/// Scene-graph model: symbols and edges are just the graph's counts,
/// independent of any grid resolution.
inline SymbolCount memory_compressed(const SceneGraph& g) {
  return {g.num_nodes(), g.num_edges()};
}

}  // namespace atrium
