#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "atrium/esdf.hpp"
#include "atrium/gvd.hpp"
#include "atrium/voxel_grid.hpp"

using namespace atrium;

namespace {

// Quadratic-time reference transform: scan every occupied voxel for every
// cell. Shares only the final sqrt with the implementation under test, so
// exact equality is meaningful.
struct BruteEsdf {
  std::vector<double> dist;
  std::vector<int64_t> d2;
};

BruteEsdf brute_force_esdf(const VoxelGrid& g, VoxelIndex lo, VoxelIndex hi) {
  std::vector<VoxelIndex> obstacles;
  for (int z = lo.z; z <= hi.z; ++z)
    for (int y = lo.y; y <= hi.y; ++y)
      for (int x = lo.x; x <= hi.x; ++x)
        if (g.state({x, y, z}) == VoxelState::Occupied) obstacles.push_back({x, y, z});

  int nx = hi.x - lo.x + 1, ny = hi.y - lo.y + 1, nz = hi.z - lo.z + 1;
  BruteEsdf out;
  out.dist.assign(static_cast<size_t>(nx) * ny * nz,
                  std::numeric_limits<double>::infinity());
  out.d2.assign(out.dist.size(), -1);
  size_t i = 0;
  for (int z = lo.z; z <= hi.z; ++z)
    for (int y = lo.y; y <= hi.y; ++y)
      for (int x = lo.x; x <= hi.x; ++x, ++i) {
        int64_t best = -1;
        for (const auto& o : obstacles) {
          int64_t dx = x - o.x, dy = y - o.y, dz = z - o.z;
          int64_t d2 = dx * dx + dy * dy + dz * dz;
          if (best < 0 || d2 < best) best = d2;
        }
        out.d2[i] = best;
        if (best >= 0) out.dist[i] = std::sqrt(double(best)) * g.resolution();
      }
  return out;
}

VoxelGrid random_grid(std::mt19937_64& rng, int nx, int ny, int nz, double occ_prob) {
  VoxelGrid g(Vec3::Zero(), 0.1, nx, ny, nz, VoxelState::Free);
  std::bernoulli_distribution occ(occ_prob);
  for (size_t i = 0; i < g.num_cells(); ++i)
    if (occ(rng)) g.set_state(g.from_linear(i), VoxelState::Occupied);
  return g;
}

/// Straight corridor along x: occupied walls at the y extremes, free inside.
VoxelGrid corridor_grid(int nx, int ny, int nz) {
  VoxelGrid g(Vec3::Zero(), 0.1, nx, ny, nz, VoxelState::Free);
  for (int z = 0; z < nz; ++z)
    for (int x = 0; x < nx; ++x) {
      g.set_state({x, 0, z}, VoxelState::Occupied);
      g.set_state({x, ny - 1, z}, VoxelState::Occupied);
    }
  return g;
}

}  // namespace

TEST_CASE("distance transform equals the quadratic reference exactly") {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 25; ++trial) {
    int nx = 3 + static_cast<int>(rng() % 18);
    int ny = 3 + static_cast<int>(rng() % 18);
    int nz = 1 + static_cast<int>(rng() % 8);
    double p = (trial % 5 == 0) ? 0.01 : 0.05 + 0.25 * (trial % 4);
    VoxelGrid g = random_grid(rng, nx, ny, nz, p);
    EsdfField f = compute_esdf(g);
    BruteEsdf ref = brute_force_esdf(g, {0, 0, 0}, {nx - 1, ny - 1, nz - 1});
    for (size_t i = 0; i < ref.dist.size(); ++i) {
      if (std::isinf(ref.dist[i])) {
        REQUIRE(std::isinf(f.dist[i]));
        REQUIRE(f.basis[i] == -1);
      } else {
        REQUIRE(f.dist[i] == ref.dist[i]);  // identical arithmetic, no tolerance
      }
    }
  }
}

TEST_CASE("basis voxels attain the reported distance") {
  std::mt19937_64 rng(71);
  VoxelGrid g = random_grid(rng, 14, 12, 5, 0.1);
  EsdfField f = compute_esdf(g);
  for (int z = 0; z < g.nz(); ++z)
    for (int y = 0; y < g.ny(); ++y)
      for (int x = 0; x < g.nx(); ++x) {
        VoxelIndex v{x, y, z};
        int64_t b = f.basis_at(v);
        if (b < 0) continue;
        VoxelIndex o = g.from_linear(static_cast<size_t>(b));
        REQUIRE(g.state(o) == VoxelState::Occupied);
        double d = (g.center(o) - g.center(v)).norm();
        REQUIRE(d == Catch::Approx(f.distance_at(v)).margin(1e-12));
      }
}

TEST_CASE("grid without obstacles yields infinite distances") {
  VoxelGrid g(Vec3::Zero(), 0.2, 6, 5, 4, VoxelState::Free);
  EsdfField f = compute_esdf(g);
  for (double d : f.dist) REQUIRE(std::isinf(d));
  for (int64_t b : f.basis) REQUIRE(b == -1);
}

TEST_CASE("occupied voxels carry distance zero and themselves as basis") {
  std::mt19937_64 rng(73);
  VoxelGrid g = random_grid(rng, 9, 9, 3, 0.3);
  EsdfField f = compute_esdf(g);
  for (size_t i = 0; i < g.num_cells(); ++i) {
    VoxelIndex v = g.from_linear(i);
    if (g.state(v) != VoxelState::Occupied) continue;
    REQUIRE(f.distance_at(v) == 0.0);
    REQUIRE(f.basis_at(v) == static_cast<int64_t>(i));
  }
}

TEST_CASE("windowed transform matches the reference restricted to the window") {
  std::mt19937_64 rng(79);
  VoxelGrid g = random_grid(rng, 20, 16, 6, 0.12);
  VoxelIndex lo{4, 3, 1}, hi{15, 12, 4};
  EsdfField f = compute_esdf(g, lo, hi);
  BruteEsdf ref = brute_force_esdf(g, lo, hi);
  for (size_t i = 0; i < ref.dist.size(); ++i) {
    if (std::isinf(ref.dist[i]))
      REQUIRE(std::isinf(f.dist[i]));
    else
      REQUIRE(f.dist[i] == ref.dist[i]);
  }
}

TEST_CASE("window bounds are validated") {
  VoxelGrid g(Vec3::Zero(), 0.1, 5, 5, 5, VoxelState::Free);
  REQUIRE_THROWS_AS(compute_esdf(g, {0, 0, 0}, {5, 4, 4}), std::out_of_range);
  REQUIRE_THROWS_AS(compute_esdf(g, {3, 0, 0}, {2, 4, 4}), std::invalid_argument);
}

TEST_CASE("corridor medial axis lands on the centerline") {
  VoxelGrid g = corridor_grid(21, 9, 3);
  EsdfField f = compute_esdf(g);
  GvdParams p;
  p.theta_min = M_PI / 4;
  auto gvd = extract_gvd(g, f, p);
  REQUIRE_FALSE(gvd.empty());
  for (const auto& [cell, v] : gvd) {
    VoxelIndex idx = g.from_linear(cell);
    REQUIRE(idx.y == 4);  // equidistant row between the two walls
    REQUIRE(g.state(idx) == VoxelState::Free);
  }
}

TEST_CASE("skeleton voxels carry well-separated basis points") {
  std::mt19937_64 rng(83);
  VoxelGrid g = random_grid(rng, 16, 14, 4, 0.08);
  EsdfField f = compute_esdf(g);
  GvdParams p;
  p.min_basis = 2;
  p.theta_min = M_PI / 4;
  auto gvd = extract_gvd(g, f, p);
  for (const auto& [cell, v] : gvd) {
    VoxelIndex idx = g.from_linear(cell);
    REQUIRE(g.state(idx) == VoxelState::Free);
    REQUIRE(v.distance > 0.0);
    REQUIRE(v.basis_points.size() >= 2);
    // pairwise distinct patches
    for (size_t i = 0; i < v.basis_points.size(); ++i)
      for (size_t j = i + 1; j < v.basis_points.size(); ++j)
        REQUIRE((v.basis_points[i] - v.basis_points[j]).norm() > g.resolution());
    // every basis point is nearly as close as the clearance
    for (const Vec3& b : v.basis_points)
      REQUIRE((b - v.position).norm() <= v.distance + g.resolution() + 1e-9);
    // the qualifying angle is reproducible from the stored data
    double best = 0.0;
    for (size_t i = 0; i < v.basis_points.size(); ++i)
      for (size_t j = i + 1; j < v.basis_points.size(); ++j) {
        Vec3 a = v.basis_points[i] - v.position;
        Vec3 b = v.basis_points[j] - v.position;
        double c = std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0);
        best = std::max(best, std::acos(c));
      }
    REQUIRE(best >= p.theta_min - 1e-9);
  }
}

TEST_CASE("raising the angle threshold only removes skeleton voxels") {
  VoxelGrid g = corridor_grid(25, 11, 3);
  EsdfField f = compute_esdf(g);
  GvdParams loose;
  loose.theta_min = 0.0;
  GvdParams strict;
  strict.theta_min = M_PI / 2;
  auto wide = extract_gvd(g, f, loose);
  auto narrow = extract_gvd(g, f, strict);
  REQUIRE(narrow.size() <= wide.size());
  for (const auto& [cell, v] : narrow) REQUIRE(wide.count(cell) == 1);
}
