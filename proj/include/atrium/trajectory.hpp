#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "atrium/se3.hpp"
#include "atrium/voxel_grid.hpp"
#include "atrium/world.hpp"

namespace atrium {

struct Trajectory {
  std::vector<double> timestamps;
  std::vector<Se3> poses;
  size_t size() const { return poses.size(); }
};

struct TrajectoryParams {
  double agent_height = 1.2;  // above the room floor
  double step = 0.3;          // keyframe spacing along the path
  double clearance = 0.3;     // lateral margin kept from walls
  bool revisit = true;        // close the tour back at the start room
  double dt = 0.1;
};

namespace detail {

/// A* on an 8-connected free mask; returns cell path including both ends.
inline std::vector<std::pair<int, int>> astar_2d(
    const std::vector<uint8_t>& free, int nx, int ny, std::pair<int, int> s,
    std::pair<int, int> t) {
  auto idx = [&](int x, int y) { return y * nx + x; };
  if (!free[idx(s.first, s.second)] || !free[idx(t.first, t.second)]) return {};
  std::vector<double> dist(static_cast<size_t>(nx) * ny,
                           std::numeric_limits<double>::infinity());
  std::vector<int> from(static_cast<size_t>(nx) * ny, -1);
  auto h = [&](int x, int y) {
    return std::hypot(double(x - t.first), double(y - t.second));
  };
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  dist[idx(s.first, s.second)] = 0;
  open.push({h(s.first, s.second), idx(s.first, s.second)});
  const int dx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  const int dy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  while (!open.empty()) {
    auto [f, cur] = open.top();
    open.pop();
    int cx = cur % nx, cy = cur / nx;
    if (cx == t.first && cy == t.second) break;
    if (f - h(cx, cy) > dist[cur] + 1e-12) continue;
    for (int k = 0; k < 8; ++k) {
      int x = cx + dx[k], y = cy + dy[k];
      if (x < 0 || y < 0 || x >= nx || y >= ny || !free[idx(x, y)]) continue;
      if (k >= 4 && (!free[idx(cx, y)] || !free[idx(x, cy)])) continue;  // no corner cutting
      double nd = dist[cur] + (k < 4 ? 1.0 : std::sqrt(2.0));
      if (nd < dist[idx(x, y)] - 1e-12) {
        dist[idx(x, y)] = nd;
        from[idx(x, y)] = cur;
        open.push({nd + h(x, y), idx(x, y)});
      }
    }
  }
  if (from[idx(t.first, t.second)] < 0 && s != t) return {};
  std::vector<std::pair<int, int>> path;
  for (int cur = idx(t.first, t.second); cur >= 0; cur = from[cur]) {
    path.push_back({cur % nx, cur / nx});
    if (cur == idx(s.first, s.second)) break;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace detail

/// Collision-free keyframe tour visiting every room (depth-first over the
/// door graph, backtracking included), planned on an eroded free slice at
/// agent height. Poses face along the motion direction.
inline Trajectory generate_trajectory(const World& w, const VoxelGrid& g,
                                      const TrajectoryParams& p, uint64_t seed) {
  if (w.rooms.empty()) throw std::invalid_argument("world has no rooms");
  (void)seed;  // the tour is structural; kept for interface stability

  const double z_floor = w.rooms[0].interior.min.z();
  const double z_agent = z_floor + p.agent_height;
  int zc = g.cell_at(Vec3(0, 0, z_agent)).z;
  zc = std::clamp(zc, 0, g.nz() - 1);

  const int nx = g.nx(), ny = g.ny();
  std::vector<uint8_t> free(static_cast<size_t>(nx) * ny, 0);
  int r = std::max(0, static_cast<int>(std::ceil(p.clearance / g.resolution())));
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      bool ok = true;
      for (int dy = -r; dy <= r && ok; ++dy)
        for (int dx = -r; dx <= r && ok; ++dx) {
          if (dx * dx + dy * dy > r * r) continue;
          VoxelIndex v{x + dx, y + dy, zc};
          if (!g.in_bounds(v) || g.state(v) != VoxelState::Free) ok = false;
        }
      free[static_cast<size_t>(y) * nx + x] = ok ? 1 : 0;
    }

  auto nearest_free = [&](const Vec3& pos) {
    VoxelIndex c = g.cell_at(pos);
    std::pair<int, int> best{-1, -1};
    double best_d = std::numeric_limits<double>::infinity();
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x)
        if (free[static_cast<size_t>(y) * nx + x]) {
          double d = std::hypot(double(x - c.x), double(y - c.y));
          if (d < best_d) {
            best_d = d;
            best = {x, y};
          }
        }
    if (best.first < 0) throw std::runtime_error("no free space at agent height");
    return best;
  };

  // depth-first room tour over the door graph, with backtracking
  std::map<int, std::vector<int>> door_adj;
  for (const auto& d : w.doors) {
    door_adj[d.room_a].push_back(d.room_b);
    door_adj[d.room_b].push_back(d.room_a);
  }
  for (auto& [k, v] : door_adj) std::sort(v.begin(), v.end());
  std::vector<int> tour;
  std::vector<bool> seen(w.rooms.size(), false);
  std::function<void(int)> dfs = [&](int room) {
    seen[room] = true;
    tour.push_back(room);
    for (int nb : door_adj[room])
      if (!seen[nb]) {
        dfs(nb);
        tour.push_back(room);
      }
  };
  dfs(0);
  if (p.revisit && tour.size() > 1 && tour.back() != tour.front()) tour.push_back(0);
  for (size_t i = 0; i < w.rooms.size(); ++i)
    if (!seen[i]) throw std::runtime_error("door graph does not reach room " + std::to_string(i));

  std::vector<std::pair<int, int>> cells;
  for (size_t i = 0; i < tour.size(); ++i) {
    auto wp = nearest_free(w.rooms[tour[i]].interior.center());
    if (cells.empty()) {
      cells.push_back(wp);
      continue;
    }
    auto leg = detail::astar_2d(free, nx, ny, cells.back(), wp);
    if (leg.empty()) throw std::runtime_error("no path between rooms " +
                                              std::to_string(tour[i - 1]) + " and " +
                                              std::to_string(tour[i]));
    cells.insert(cells.end(), leg.begin() + 1, leg.end());
  }

  std::vector<Vec3> pts;
  for (auto [x, y] : cells)
    pts.push_back(g.center({x, y, zc}).cwiseProduct(Vec3(1, 1, 0)) + Vec3(0, 0, z_agent));

  Trajectory traj;
  double carried = 0.0;
  for (size_t i = 0; i < pts.size(); ++i) {
    if (i == 0) {
      traj.poses.push_back(se3_from_yaw(0, pts[0]));
      continue;
    }
    Vec3 seg = pts[i] - pts[i - 1];
    double len = seg.norm();
    if (len < 1e-12) continue;
    double yaw = std::atan2(seg.y(), seg.x());
    double along = p.step - carried;
    while (along <= len + 1e-12) {
      traj.poses.push_back(se3_from_yaw(yaw, pts[i - 1] + seg * (along / len)));
      along += p.step;
    }
    carried = len - (along - p.step);
  }
  if (traj.poses.size() < 2) traj.poses.push_back(se3_from_yaw(0, pts.back()));
  traj.poses.front().q = traj.poses.size() > 1 ? traj.poses[1].q : traj.poses.front().q;
  traj.timestamps.resize(traj.poses.size());
  for (size_t i = 0; i < traj.poses.size(); ++i) traj.timestamps[i] = p.dt * double(i);
  return traj;
}

/// Integrates the true relative motion with additive white noise on the
/// se(3) tangent: odom_k = odom_{k-1} * rel_k * exp(xi_k). Zero sigmas give
/// back the input.
inline Trajectory apply_drift(const Trajectory& gt, double sigma_rot,
                              double sigma_trans, uint64_t seed) {
  Trajectory out;
  out.timestamps = gt.timestamps;
  if (gt.poses.empty()) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nr(0.0, sigma_rot), nt(0.0, sigma_trans);
  out.poses.push_back(gt.poses[0]);
  for (size_t k = 1; k < gt.poses.size(); ++k) {
    Se3 rel = gt.poses[k - 1].inverse() * gt.poses[k];
    Vec6 xi = Vec6::Zero();
    if (sigma_rot > 0 || sigma_trans > 0) {
      for (int i = 0; i < 3; ++i) xi[i] = sigma_rot > 0 ? nr(rng) : 0.0;
      for (int i = 3; i < 6; ++i) xi[i] = sigma_trans > 0 ? nt(rng) : 0.0;
    }
    out.poses.push_back(out.poses.back() * rel * Se3::exp(xi));
  }
  return out;
}

inline std::string trajectory_to_text(const Trajectory& t) {
  std::ostringstream os;
  for (size_t i = 0; i < t.size(); ++i) {
    const Se3& p = t.poses[i];
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                  t.timestamps[i], p.t.x(), p.t.y(), p.t.z(), p.q.x(), p.q.y(),
                  p.q.z(), p.q.w());
    os << buf;
  }
  return os.str();
}

inline Trajectory trajectory_from_text(const std::string& text) {
  Trajectory t;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double ts, tx, ty, tz, qx, qy, qz, qw;
    if (!(ls >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
      throw std::runtime_error("bad trajectory line: " + line);
    Se3 p;
    p.t = Vec3(tx, ty, tz);
    p.q = Eigen::Quaterniond(qw, qx, qy, qz).normalized();
    t.timestamps.push_back(ts);
    t.poses.push_back(p);
  }
  return t;
}

}  // namespace atrium
