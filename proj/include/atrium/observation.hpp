#pragma once

#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "atrium/se3.hpp"
#include "atrium/voxel_grid.hpp"

namespace atrium {

struct ObservedPoint {
  Vec3 position = Vec3::Zero();  // surface voxel center, world frame
  int label = 0;
  int64_t landmark = -1;  // source object, -1 for structure
  int64_t feature = -1;   // stable id of the physical surface patch
};

/// One keyframe's sensor return: labeled surface points, the landmark ids
/// they came from, and the free cells the rays passed through.
struct Observation {
  std::vector<ObservedPoint> points;
  std::set<int64_t> visible_landmarks;
  std::vector<Vec3> free_cells;
};

struct SensorParams {
  double range = 5.0;
  int rays_azimuth = 180;
  int rays_elevation = 45;
};

/// Re-express an observation in another frame: p' = T * p.
inline Observation transform_observation(const Observation& in, const Se3& T) {
  Observation out;
  out.points.reserve(in.points.size());
  for (const auto& p : in.points)
    out.points.push_back({T * p.position, p.label, p.landmark, p.feature});
  out.visible_landmarks = in.visible_landmarks;
  out.free_cells.reserve(in.free_cells.size());
  for (const auto& c : in.free_cells) out.free_cells.push_back(T * c);
  return out;
}

/// Spherical ray bundle marched voxel by voxel from the pose origin. Each ray
/// stops at its first occupied cell inside range; that cell becomes a surface
/// point and the traversed cells are reported free. The pose must sit in a
/// non-occupied voxel.
inline Observation render_observation(const VoxelGrid& g, const Se3& pose,
                                      const SensorParams& sp) {
  Observation obs;
  if (sp.range <= 0.0) return obs;
  VoxelIndex start = g.cell_at(pose.t);
  if (!g.in_bounds(start))
    throw std::invalid_argument("sensor pose outside the grid");
  if (g.state(start) == VoxelState::Occupied)
    throw std::invalid_argument("sensor pose inside an occupied voxel");

  std::set<size_t> hit_cells, free_cells;
  const double res = g.resolution();
  for (int e = 0; e < sp.rays_elevation; ++e) {
    // uniform in sin(elevation) covers the sphere evenly
    double s = -1.0 + 2.0 * (e + 0.5) / sp.rays_elevation;
    double el = std::asin(s);
    for (int a = 0; a < sp.rays_azimuth; ++a) {
      double az = 2.0 * M_PI * (a + 0.5) / sp.rays_azimuth;
      Vec3 dir_local(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                     std::sin(el));
      Vec3 dir = pose.q * dir_local;

      // Amanatides-Woo traversal
      VoxelIndex v = start;
      Vec3 p = pose.t;
      int step[3];
      double t_max[3], t_delta[3];
      int vi[3] = {v.x, v.y, v.z};
      for (int i = 0; i < 3; ++i) {
        if (dir[i] > 1e-12) {
          step[i] = 1;
          double edge = g.origin()[i] + (vi[i] + 1) * res;
          t_max[i] = (edge - p[i]) / dir[i];
          t_delta[i] = res / dir[i];
        } else if (dir[i] < -1e-12) {
          step[i] = -1;
          double edge = g.origin()[i] + vi[i] * res;
          t_max[i] = (edge - p[i]) / dir[i];
          t_delta[i] = res / -dir[i];
        } else {
          step[i] = 0;
          t_max[i] = std::numeric_limits<double>::infinity();
          t_delta[i] = std::numeric_limits<double>::infinity();
        }
      }
      double t = 0.0;
      while (t <= sp.range) {
        VoxelIndex cur{vi[0], vi[1], vi[2]};
        if (!g.in_bounds(cur)) break;
        if (g.state(cur) == VoxelState::Occupied) {
          if ((g.center(cur) - pose.t).norm() <= sp.range)
            hit_cells.insert(g.linear(cur));
          break;
        }
        free_cells.insert(g.linear(cur));
        int axis = 0;
        if (t_max[1] < t_max[axis]) axis = 1;
        if (t_max[2] < t_max[axis]) axis = 2;
        t = t_max[axis];
        t_max[axis] += t_delta[axis];
        vi[axis] += step[axis];
      }
    }
  }

  for (size_t idx : hit_cells) {
    VoxelIndex v = g.from_linear(idx);
    obs.points.push_back({g.center(v), g.label(v), g.landmark(v),
                          static_cast<int64_t>(idx)});
    if (g.landmark(v) >= 0) obs.visible_landmarks.insert(g.landmark(v));
  }
  obs.free_cells.reserve(free_cells.size());
  for (size_t idx : free_cells) obs.free_cells.push_back(g.center(g.from_linear(idx)));
  return obs;
}

}  // namespace atrium
