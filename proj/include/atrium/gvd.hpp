#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "atrium/esdf.hpp"
#include "atrium/geometry.hpp"
#include "atrium/voxel_grid.hpp"

namespace atrium {

/// A voxel on the generalized Voronoi diagram: a free voxel roughly
/// equidistant from at least two well-separated obstacle patches.
struct GvdVoxel {
  size_t cell = 0;  ///< linear index in the full grid
  Vec3 position = Vec3::Zero();
  double distance = 0.0;
  std::vector<Vec3> basis_points;  ///< mutually distinct nearest-obstacle points
};

struct GvdParams {
  int min_basis = 2;          ///< obstacle patches required to qualify
  double theta_min = M_PI / 4;  ///< min angle subtended by two basis directions
};

namespace detail {

/// Collect candidate nearest-obstacle points for a voxel: its own basis plus
/// the bases of its 26-neighbors, keeping those whose distance to the voxel
/// stays within half a voxel of the voxel's own clearance, then thin them so
/// survivors are pairwise more than one voxel apart.
inline std::vector<Vec3> distinct_bases(const VoxelGrid& g, const EsdfField& f,
                                        const VoxelIndex& v) {
  const double res = g.resolution();
  const double d = f.distance_at(v);
  const Vec3 p = g.center(v);
  std::vector<int64_t> cand;
  auto push = [&](const VoxelIndex& u) {
    if (!f.contains(u)) return;
    int64_t b = f.basis_at(u);
    if (b >= 0) cand.push_back(b);
  };
  push(v);
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (!dx && !dy && !dz) continue;
        push({v.x + dx, v.y + dy, v.z + dz});
      }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  struct Scored {
    double extra;
    int64_t idx;
    Vec3 pos;
  };
  std::vector<Scored> ok;
  for (int64_t b : cand) {
    Vec3 bp = g.center(g.from_linear(static_cast<size_t>(b)));
    double extra = (bp - p).norm() - d;
    if (extra <= res + 1e-12) ok.push_back({extra, b, bp});
  }
  std::sort(ok.begin(), ok.end(), [](const Scored& a, const Scored& b) {
    if (a.extra != b.extra) return a.extra < b.extra;
    return a.idx < b.idx;
  });
  std::vector<Vec3> kept;
  for (const auto& s : ok) {
    bool distinct = true;
    for (const Vec3& k : kept)
      if ((s.pos - k).norm() <= res + 1e-12) {
        distinct = false;
        break;
      }
    if (distinct) kept.push_back(s.pos);
  }
  return kept;
}

inline double max_pairwise_angle(const Vec3& at, const std::vector<Vec3>& bases) {
  double best = 0.0;
  for (size_t i = 0; i < bases.size(); ++i)
    for (size_t j = i + 1; j < bases.size(); ++j) {
      Vec3 a = bases[i] - at;
      Vec3 b = bases[j] - at;
      double na = a.norm(), nb = b.norm();
      if (na < 1e-12 || nb < 1e-12) continue;
      double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
      best = std::max(best, std::acos(c));
    }
  return best;
}

}  // namespace detail

/// Extract the GVD restricted to observed-free voxels of the window.
/// Keys the result by full-grid linear index, ascending.
inline std::map<size_t, GvdVoxel> extract_gvd(const VoxelGrid& g, const EsdfField& f,
                                              const GvdParams& p = {}) {
  std::map<size_t, GvdVoxel> out;
  for (int z = 0; z < f.nz; ++z)
    for (int y = 0; y < f.ny; ++y)
      for (int x = 0; x < f.nx; ++x) {
        VoxelIndex v{f.lo.x + x, f.lo.y + y, f.lo.z + z};
        if (g.state(v) != VoxelState::Free) continue;
        double d = f.distance_at(v);
        if (!std::isfinite(d) || d <= 0.0) continue;
        auto bases = detail::distinct_bases(g, f, v);
        if (static_cast<int>(bases.size()) < p.min_basis) continue;
        Vec3 pos = g.center(v);
        if (detail::max_pairwise_angle(pos, bases) < p.theta_min - 1e-12) continue;
        GvdVoxel gv;
        gv.cell = g.linear(v);
        gv.position = pos;
        gv.distance = d;
        gv.basis_points = std::move(bases);
        out.emplace(gv.cell, std::move(gv));
      }
  return out;
}

}  // namespace atrium
