#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "atrium/geometry.hpp"

namespace atrium {

enum class VoxelState : uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

struct VoxelIndex {
  int x = 0, y = 0, z = 0;
  friend bool operator==(const VoxelIndex&, const VoxelIndex&) = default;
  friend auto operator<=>(const VoxelIndex&, const VoxelIndex&) = default;
};

/// Dense axis-aligned voxel grid. Labels: 0 free/unknown, 1 structure,
/// >=2 object semantic classes. Landmark ids tie occupied voxels back to a
/// world object (-1 for structure).
class VoxelGrid {
 public:
  VoxelGrid() = default;

  VoxelGrid(const Vec3& origin, double resolution, int nx, int ny, int nz,
            VoxelState fill = VoxelState::Unknown)
      : origin_(origin), res_(resolution), nx_(nx), ny_(ny), nz_(nz) {
    if (resolution <= 0.0) throw std::invalid_argument("resolution must be positive");
    if (nx < 0 || ny < 0 || nz < 0) throw std::invalid_argument("negative grid dims");
    size_t n = num_cells();
    state_.assign(n, fill);
    label_.assign(n, 0);
    landmark_.assign(n, -1);
  }

  size_t num_cells() const {
    return static_cast<size_t>(nx_) * static_cast<size_t>(ny_) *
           static_cast<size_t>(nz_);
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  double resolution() const { return res_; }
  const Vec3& origin() const { return origin_; }

  bool in_bounds(const VoxelIndex& v) const {
    return v.x >= 0 && v.y >= 0 && v.z >= 0 && v.x < nx_ && v.y < ny_ && v.z < nz_;
  }

  size_t linear(const VoxelIndex& v) const {
    return (static_cast<size_t>(v.z) * ny_ + v.y) * nx_ + v.x;
  }

  VoxelIndex from_linear(size_t idx) const {
    int x = static_cast<int>(idx % nx_);
    int y = static_cast<int>((idx / nx_) % ny_);
    int z = static_cast<int>(idx / (static_cast<size_t>(nx_) * ny_));
    return {x, y, z};
  }

  Vec3 center(const VoxelIndex& v) const {
    return origin_ + res_ * Vec3(v.x + 0.5, v.y + 0.5, v.z + 0.5);
  }

  VoxelIndex cell_at(const Vec3& p) const {
    return {static_cast<int>(std::floor((p.x() - origin_.x()) / res_)),
            static_cast<int>(std::floor((p.y() - origin_.y()) / res_)),
            static_cast<int>(std::floor((p.z() - origin_.z()) / res_))};
  }

  bool in_bounds_point(const Vec3& p) const { return in_bounds(cell_at(p)); }

  VoxelState state(const VoxelIndex& v) const { return state_[linear(v)]; }
  void set_state(const VoxelIndex& v, VoxelState s) { state_[linear(v)] = s; }
  int32_t label(const VoxelIndex& v) const { return label_[linear(v)]; }
  void set_label(const VoxelIndex& v, int32_t l) { label_[linear(v)] = l; }
  int64_t landmark(const VoxelIndex& v) const { return landmark_[linear(v)]; }
  void set_landmark(const VoxelIndex& v, int64_t id) { landmark_[linear(v)] = id; }

  size_t count(VoxelState s) const {
    size_t n = 0;
    for (VoxelState v : state_)
      if (v == s) ++n;
    return n;
  }

  /// Occupied voxel with at least one non-occupied 6-neighbor (or on the
  /// grid border): the set rendered and integrated as layer-1 points.
  bool is_surface(const VoxelIndex& v) const {
    if (state(v) != VoxelState::Occupied) return false;
    static constexpr std::array<std::array<int, 3>, 6> k6 = {
        {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};
    for (const auto& d : k6) {
      VoxelIndex n{v.x + d[0], v.y + d[1], v.z + d[2]};
      if (!in_bounds(n) || state(n) != VoxelState::Occupied) return true;
    }
    return false;
  }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    const char magic[8] = {'V', 'G', 'R', 'D', '0', '1', 0, 0};
    f.write(magic, 8);
    double header[4] = {origin_.x(), origin_.y(), origin_.z(), res_};
    int32_t dims[3] = {nx_, ny_, nz_};
    f.write(reinterpret_cast<const char*>(header), sizeof(header));
    f.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    f.write(reinterpret_cast<const char*>(state_.data()), state_.size());
    f.write(reinterpret_cast<const char*>(label_.data()),
            label_.size() * sizeof(int32_t));
    f.write(reinterpret_cast<const char*>(landmark_.data()),
            landmark_.size() * sizeof(int64_t));
    if (!f) throw std::runtime_error("write failed: " + path);
  }

  static VoxelGrid load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::string(magic, 4) != "VGRD")
      throw std::runtime_error("not a voxel grid file: " + path);
    double header[4];
    int32_t dims[3];
    f.read(reinterpret_cast<char*>(header), sizeof(header));
    f.read(reinterpret_cast<char*>(dims), sizeof(dims));
    VoxelGrid g(Vec3(header[0], header[1], header[2]), header[3], dims[0],
                dims[1], dims[2]);
    f.read(reinterpret_cast<char*>(g.state_.data()), g.state_.size());
    f.read(reinterpret_cast<char*>(g.label_.data()), g.label_.size() * sizeof(int32_t));
    f.read(reinterpret_cast<char*>(g.landmark_.data()),
           g.landmark_.size() * sizeof(int64_t));
    if (!f) throw std::runtime_error("truncated voxel grid file: " + path);
    return g;
  }

 private:
  Vec3 origin_ = Vec3::Zero();
  double res_ = 1.0;
  int nx_ = 0, ny_ = 0, nz_ = 0;
  std::vector<VoxelState> state_;
  std::vector<int32_t> label_;
  std::vector<int64_t> landmark_;
};

}  // namespace atrium
