#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>

namespace atrium {

using Vec3 = Eigen::Vector3d;

/// Axis-aligned bounding box.
struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  bool empty() const { return !(min.x() <= max.x()); }

  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }

  void expand(const Aabb& other) {
    if (other.empty()) return;
    expand(other.min);
    expand(other.max);
  }

  bool contains(const Vec3& p) const {
    return !empty() && (p.array() >= min.array()).all() &&
           (p.array() <= max.array()).all();
  }

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return empty() ? Vec3::Zero() : Vec3(max - min); }

  double volume() const {
    if (empty()) return 0.0;
    Vec3 e = extent();
    return e.x() * e.y() * e.z();
  }

  /// Intersection-over-union of two boxes; 0 when either is empty.
  double iou(const Aabb& other) const {
    if (empty() || other.empty()) return 0.0;
    Vec3 lo = min.cwiseMax(other.min);
    Vec3 hi = max.cwiseMin(other.max);
    if ((lo.array() > hi.array()).any()) return 0.0;
    Aabb inter{lo, hi};
    double vi = inter.volume();
    double vu = volume() + other.volume() - vi;
    return vu > 0.0 ? vi / vu : 0.0;
  }
};

/// Integer cell key for uniform spatial hashing.
struct CellKey {
  int64_t x = 0, y = 0, z = 0;
  friend bool operator==(const CellKey&, const CellKey&) = default;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

inline CellKey cell_of(const Vec3& p, double cell_size) {
  return CellKey{static_cast<int64_t>(std::floor(p.x() / cell_size)),
                 static_cast<int64_t>(std::floor(p.y() / cell_size)),
                 static_cast<int64_t>(std::floor(p.z() / cell_size))};
}

struct CellKeyHash {
  size_t operator()(const CellKey& k) const {
    uint64_t h = 1469598103934665603ull;
    for (uint64_t v : {static_cast<uint64_t>(k.x), static_cast<uint64_t>(k.y),
                       static_cast<uint64_t>(k.z)}) {
      h ^= v;
      h *= 1099511628211ull;
    }
    return static_cast<size_t>(h);
  }
};

}  // namespace atrium
