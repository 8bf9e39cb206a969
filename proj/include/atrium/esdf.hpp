#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "atrium/voxel_grid.hpp"

namespace atrium {

/// Distance field over a window of a grid. Distances are meters from the
/// voxel center to the nearest occupied voxel center inside the window;
/// basis holds that voxel's linear index in the full grid (-1 if the window
/// holds no obstacle).
struct EsdfField {
  VoxelIndex lo;
  int nx = 0, ny = 0, nz = 0;
  double resolution = 0.0;
  std::vector<double> dist;
  std::vector<int64_t> basis;

  bool contains(const VoxelIndex& v) const {
    return v.x >= lo.x && v.y >= lo.y && v.z >= lo.z && v.x < lo.x + nx &&
           v.y < lo.y + ny && v.z < lo.z + nz;
  }

  size_t local_linear(const VoxelIndex& v) const {
    return (static_cast<size_t>(v.z - lo.z) * ny + (v.y - lo.y)) * nx + (v.x - lo.x);
  }

  double distance_at(const VoxelIndex& v) const { return dist[local_linear(v)]; }
  int64_t basis_at(const VoxelIndex& v) const { return basis[local_linear(v)]; }
};

namespace detail {

constexpr int64_t kD2Inf = std::numeric_limits<int64_t>::max() / 4;

/// Lower envelope of parabolas f(q) + (x-q)^2 along one axis, recording the
/// winning source index per cell.
inline void envelope_pass(const std::vector<int64_t>& f, std::vector<int64_t>& d,
                          std::vector<int32_t>& arg, int n, std::vector<int>& v,
                          std::vector<double>& z) {
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] >= kD2Inf) continue;
    double s = 0;
    while (k >= 0) {
      s = (double(f[q] + int64_t(q) * q) - double(f[v[k]] + int64_t(v[k]) * v[k])) /
          (2.0 * q - 2.0 * v[k]);
      if (s <= z[k])
        --k;
      else
        break;
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -std::numeric_limits<double>::infinity() : s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  if (k < 0) {
    for (int x = 0; x < n; ++x) {
      d[x] = kD2Inf;
      arg[x] = -1;
    }
    return;
  }
  int j = 0;
  for (int x = 0; x < n; ++x) {
    while (z[j + 1] < x) ++j;
    int64_t dx = x - v[j];
    d[x] = f[v[j]] + dx * dx;
    arg[x] = v[j];
  }
}

}  // namespace detail

/// Exact multi-source Euclidean distance transform seeded at every occupied
/// voxel in the window, one separable pass per axis. Occupied voxels get
/// distance zero with themselves as basis.
inline EsdfField compute_esdf(const VoxelGrid& g, VoxelIndex lo, VoxelIndex hi) {
  using detail::kD2Inf;
  EsdfField out;
  out.lo = lo;
  out.nx = hi.x - lo.x + 1;
  out.ny = hi.y - lo.y + 1;
  out.nz = hi.z - lo.z + 1;
  out.resolution = g.resolution();
  if (out.nx <= 0 || out.ny <= 0 || out.nz <= 0)
    throw std::invalid_argument("empty distance-field window");
  if (lo.x < 0 || lo.y < 0 || lo.z < 0 || hi.x >= g.nx() || hi.y >= g.ny() ||
      hi.z >= g.nz())
    throw std::out_of_range("distance-field window exceeds grid");
  const size_t n = static_cast<size_t>(out.nx) * out.ny * out.nz;
  auto lidx = [&](int x, int y, int z) {
    return (static_cast<size_t>(z) * out.ny + y) * out.nx + x;
  };

  // pass 1: along x, nearest occupied in the same row
  std::vector<int64_t> d2(n, kD2Inf);
  std::vector<int32_t> sx(n, -1);
  for (int z = 0; z < out.nz; ++z)
    for (int y = 0; y < out.ny; ++y) {
      int last = -1;
      for (int x = 0; x < out.nx; ++x) {
        if (g.state({lo.x + x, lo.y + y, lo.z + z}) == VoxelState::Occupied) last = x;
        if (last >= 0) {
          int64_t dx = x - last;
          d2[lidx(x, y, z)] = dx * dx;
          sx[lidx(x, y, z)] = last;
        }
      }
      last = -1;
      for (int x = out.nx - 1; x >= 0; --x) {
        if (g.state({lo.x + x, lo.y + y, lo.z + z}) == VoxelState::Occupied) last = x;
        if (last >= 0) {
          int64_t dx = last - x;
          if (dx * dx < d2[lidx(x, y, z)]) {
            d2[lidx(x, y, z)] = dx * dx;
            sx[lidx(x, y, z)] = last;
          }
        }
      }
    }

  int nmax = std::max({out.nx, out.ny, out.nz});
  std::vector<int64_t> f(nmax), dcol(nmax);
  std::vector<int32_t> acol(nmax);
  std::vector<int> venv(nmax);
  std::vector<double> zenv(nmax + 1);

  // pass 2: along y
  std::vector<int32_t> wy(n, -1);
  for (int z = 0; z < out.nz; ++z)
    for (int x = 0; x < out.nx; ++x) {
      for (int y = 0; y < out.ny; ++y) f[y] = d2[lidx(x, y, z)];
      detail::envelope_pass(f, dcol, acol, out.ny, venv, zenv);
      for (int y = 0; y < out.ny; ++y) {
        d2[lidx(x, y, z)] = dcol[y];
        wy[lidx(x, y, z)] = acol[y];
      }
    }

  // pass 3: along z
  std::vector<int32_t> wz(n, -1);
  for (int y = 0; y < out.ny; ++y)
    for (int x = 0; x < out.nx; ++x) {
      for (int z = 0; z < out.nz; ++z) f[z] = d2[lidx(x, y, z)];
      detail::envelope_pass(f, dcol, acol, out.nz, venv, zenv);
      for (int z = 0; z < out.nz; ++z) {
        d2[lidx(x, y, z)] = dcol[z];
        wz[lidx(x, y, z)] = acol[z];
      }
    }

  out.dist.assign(n, std::numeric_limits<double>::infinity());
  out.basis.assign(n, -1);
  for (int z = 0; z < out.nz; ++z)
    for (int y = 0; y < out.ny; ++y)
      for (int x = 0; x < out.nx; ++x) {
        size_t i = lidx(x, y, z);
        if (d2[i] >= kD2Inf) continue;
        int zs = wz[i];
        int ys = wy[lidx(x, y, zs)];
        int xs = sx[lidx(x, ys, zs)];
        out.dist[i] = std::sqrt(double(d2[i])) * g.resolution();
        out.basis[i] =
            static_cast<int64_t>(g.linear({lo.x + xs, lo.y + ys, lo.z + zs}));
      }
  return out;
}

inline EsdfField compute_esdf(const VoxelGrid& g) {
  return compute_esdf(g, {0, 0, 0}, {g.nx() - 1, g.ny() - 1, g.nz() - 1});
}

}  // namespace atrium
