#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "atrium/geometry.hpp"
#include "atrium/memory_model.hpp"
#include "atrium/scene_graph.hpp"
#include "atrium/union_find.hpp"
#include "atrium/voxel_grid.hpp"

namespace atrium {

struct RoomSpec {
  int id = 0;
  Aabb interior;  // free region, walls excluded
};

struct DoorSpec {
  int room_a = 0;
  int room_b = 0;
  Aabb opening;  // carved out of the wall between the rooms
};

struct ObjectSpec {
  int64_t id = 0;
  Aabb box;
  int label = 2;
  int room = 0;
};

/// Ground-truth indoor world. Geometry is implicit: anything inside the
/// bounds that is not in a room interior, a door opening, or above/below the
/// slabs is wall. Coordinates snap to the native grid pitch so rasterization
/// is exact.
struct World {
  Aabb bounds;
  double snap = 0.1;  // native grid pitch all geometry is aligned to
  std::vector<RoomSpec> rooms;
  std::vector<DoorSpec> doors;
  std::vector<ObjectSpec> objects;
  std::vector<uint64_t> groupings = {1};  // symbolic levels above rooms
  int label_vocab = 8;                    // object labels are 2..2+vocab-1

  /// Label layers for the flat-grid memory model: occupancy, objects, rooms,
  /// plus one per grouping level.
  int label_layers() const { return 3 + static_cast<int>(groupings.size()); }

  std::vector<uint64_t> grouping_counts() const {
    std::vector<uint64_t> out = {objects.size(), rooms.size()};
    out.insert(out.end(), groupings.begin(), groupings.end());
    return out;
  }
};

struct WorldParams {
  double extent_x = 12.0;
  double extent_y = 10.0;
  double interior_height = 2.5;
  double wall_thickness = 0.2;
  double snap = 0.1;
  int room_count = 6;
  double min_room_dim = 3.0;
  double door_width_min = 0.7;
  double door_width_max = 1.1;
  double extra_door_prob = 0.0;
  bool chain_layout = false;  // rooms in a strip, doors forming a path
  int objects_per_room_min = 1;
  int objects_per_room_max = 3;
  double object_min_extent = 0.4;
  double object_max_extent = 0.8;
  double object_min_height = 0.4;
  double object_max_height = 0.9;
  double object_wall_margin = 0.4;
  double object_separation = 0.8;
  int label_vocab = 6;
};

namespace detail {

inline double snap_to(double v, double pitch) {
  return std::round(v / pitch) * pitch;
}

struct Rect {
  double x0, y0, x1, y1;
  double w() const { return x1 - x0; }
  double h() const { return y1 - y0; }
  double area() const { return w() * h(); }
};

}  // namespace detail

/// Procedural floorplan: an outer shell split into rooms by axis-aligned
/// interior walls, doors carved on a spanning structure of the adjacency
/// graph, and box objects scattered inside rooms. Deterministic per seed.
inline World generate_world(const WorldParams& p, uint64_t seed) {
  using detail::Rect;
  using detail::snap_to;
  if (p.room_count < 1) throw std::invalid_argument("room_count must be >= 1");

  std::mt19937_64 rng(seed);
  World w;
  w.snap = p.snap;
  w.label_vocab = p.label_vocab;
  const double wall = snap_to(p.wall_thickness, p.snap);
  const double ex = snap_to(p.extent_x, p.snap);
  const double ey = snap_to(p.extent_y, p.snap);
  const double hz = snap_to(p.interior_height, p.snap);
  w.bounds = Aabb{Vec3(0, 0, 0), Vec3(ex, ey, hz + 2 * wall)};
  const double z0 = wall, z1 = wall + hz;

  std::vector<Rect> leaves = {{wall, wall, ex - wall, ey - wall}};
  auto can_split = [&](const Rect& r) {
    return std::max(r.w(), r.h()) >= 2 * p.min_room_dim + wall;
  };
  if (p.chain_layout) {
    while (static_cast<int>(leaves.size()) < p.room_count) {
      // always split the rightmost leaf along x to keep a strip of rooms
      Rect r = leaves.back();
      if (r.w() < 2 * p.min_room_dim + wall) break;
      std::uniform_real_distribution<double> at(r.x0 + p.min_room_dim,
                                                r.x1 - p.min_room_dim - wall);
      double cut = snap_to(at(rng), p.snap);
      cut = std::clamp(cut, r.x0 + p.min_room_dim, r.x1 - p.min_room_dim - wall);
      leaves.back() = {r.x0, r.y0, cut, r.y1};
      leaves.push_back({cut + wall, r.y0, r.x1, r.y1});
    }
  } else {
    while (static_cast<int>(leaves.size()) < p.room_count) {
      size_t pick = 0;
      for (size_t i = 1; i < leaves.size(); ++i)
        if (leaves[i].area() > leaves[pick].area()) pick = i;
      Rect r = leaves[pick];
      if (!can_split(r)) break;
      bool along_x = r.w() >= r.h();
      double len = along_x ? r.w() : r.h();
      std::uniform_real_distribution<double> at(p.min_room_dim,
                                                len - p.min_room_dim - wall);
      double cut = snap_to(at(rng), p.snap);
      cut = std::clamp(cut, p.min_room_dim, len - p.min_room_dim - wall);
      Rect a = r, b = r;
      if (along_x) {
        a.x1 = r.x0 + cut;
        b.x0 = r.x0 + cut + wall;
      } else {
        a.y1 = r.y0 + cut;
        b.y0 = r.y0 + cut + wall;
      }
      leaves[pick] = a;
      leaves.push_back(b);
    }
  }

  for (size_t i = 0; i < leaves.size(); ++i)
    w.rooms.push_back({static_cast<int>(i),
                       Aabb{Vec3(leaves[i].x0, leaves[i].y0, z0),
                            Vec3(leaves[i].x1, leaves[i].y1, z1)}});

  // adjacency: rooms separated by exactly one wall with usable overlap
  struct Adj {
    int a, b, axis;       // axis: 0 wall normal along x, 1 along y
    double lo, hi, wall_lo;  // overlap interval and wall position
  };
  std::vector<Adj> adj;
  const double jamb = std::max(0.3, 2 * p.snap);
  for (size_t i = 0; i < leaves.size(); ++i)
    for (size_t j = i + 1; j < leaves.size(); ++j) {
      const Rect &a = leaves[i], &b = leaves[j];
      auto overlap = [&](double s0, double s1, double t0, double t1) {
        return std::pair{std::max(s0, t0), std::min(s1, t1)};
      };
      if (std::abs(a.x1 + wall - b.x0) < 1e-9 || std::abs(b.x1 + wall - a.x0) < 1e-9) {
        auto [lo, hi] = overlap(a.y0, a.y1, b.y0, b.y1);
        if (hi - lo >= p.door_width_min + 2 * jamb)
          adj.push_back({static_cast<int>(i), static_cast<int>(j), 0, lo, hi,
                         std::abs(a.x1 + wall - b.x0) < 1e-9 ? a.x1 : b.x1});
      } else if (std::abs(a.y1 + wall - b.y0) < 1e-9 ||
                 std::abs(b.y1 + wall - a.y0) < 1e-9) {
        auto [lo, hi] = overlap(a.x0, a.x1, b.x0, b.x1);
        if (hi - lo >= p.door_width_min + 2 * jamb)
          adj.push_back({static_cast<int>(i), static_cast<int>(j), 1, lo, hi,
                         std::abs(a.y1 + wall - b.y0) < 1e-9 ? a.y1 : b.y1});
      }
    }

  std::vector<size_t> order(adj.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  UnionFind uf(leaves.size());
  std::vector<size_t> chosen;
  for (size_t k : order)
    if (uf.unite(adj[k].a, adj[k].b)) chosen.push_back(k);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (size_t k : order) {
    if (std::find(chosen.begin(), chosen.end(), k) != chosen.end()) continue;
    if (coin(rng) < p.extra_door_prob) chosen.push_back(k);
  }
  std::sort(chosen.begin(), chosen.end());
  if (uf.num_components() != 1)
    throw std::runtime_error("generated floorplan is not connectable");

  for (size_t k : chosen) {
    const Adj& e = adj[k];
    double max_w = std::min(p.door_width_max, e.hi - e.lo - 2 * jamb);
    std::uniform_real_distribution<double> wd(p.door_width_min, max_w);
    double width = snap_to(wd(rng), p.snap);
    width = std::clamp(width, p.snap, e.hi - e.lo - 2 * jamb);
    std::uniform_real_distribution<double> cd(e.lo + jamb + width / 2,
                                              e.hi - jamb - width / 2);
    double c = snap_to(cd(rng), p.snap);
    c = std::clamp(c, e.lo + jamb + width / 2, e.hi - jamb - width / 2);
    DoorSpec door;
    door.room_a = e.a;
    door.room_b = e.b;
    if (e.axis == 0)
      door.opening = Aabb{Vec3(e.wall_lo, c - width / 2, z0),
                          Vec3(e.wall_lo + wall, c + width / 2, z1)};
    else
      door.opening = Aabb{Vec3(c - width / 2, e.wall_lo, z0),
                          Vec3(c + width / 2, e.wall_lo + wall, z1)};
    w.doors.push_back(door);
  }

  int64_t next_obj = 0;
  std::uniform_int_distribution<int> nobj(p.objects_per_room_min, p.objects_per_room_max);
  std::uniform_int_distribution<int> lab(2, 1 + p.label_vocab);
  for (const auto& room : w.rooms) {
    int want = nobj(rng);
    for (int t = 0, placed = 0; t < 60 && placed < want; ++t) {
      std::uniform_real_distribution<double> exd(p.object_min_extent, p.object_max_extent);
      std::uniform_real_distribution<double> ezd(p.object_min_height, p.object_max_height);
      double ox = snap_to(exd(rng), p.snap), oy = snap_to(exd(rng), p.snap);
      double oz = snap_to(ezd(rng), p.snap);
      double m = p.object_wall_margin;
      double fx0 = room.interior.min.x() + m, fx1 = room.interior.max.x() - m - ox;
      double fy0 = room.interior.min.y() + m, fy1 = room.interior.max.y() - m - oy;
      if (fx1 <= fx0 || fy1 <= fy0) break;
      std::uniform_real_distribution<double> px(fx0, fx1), py(fy0, fy1);
      Aabb box{Vec3(snap_to(px(rng), p.snap), snap_to(py(rng), p.snap), z0), Vec3()};
      box.max = box.min + Vec3(ox, oy, oz);
      bool clash = false;
      for (const auto& other : w.objects) {
        Aabb grown = other.box;
        grown.min -= Vec3::Constant(p.object_separation);
        grown.max += Vec3::Constant(p.object_separation);
        if ((box.min.array() <= grown.max.array()).all() &&
            (grown.min.array() <= box.max.array()).all()) {
          clash = true;
          break;
        }
      }
      if (clash) continue;
      w.objects.push_back({next_obj++, box, lab(rng), room.id});
      ++placed;
    }
  }
  return w;
}

/// Reference four-room apartment used in documentation and memory tests:
/// 24 x 14 x 1 cells at 0.5 m pitch (336 voxels), 13 objects, 4 rooms, and
/// two grouping levels above them (unit and building).
inline World apartment_fixture() {
  World w;
  w.snap = 0.5;
  w.bounds = Aabb{Vec3(0, 0, 0), Vec3(12.0, 7.0, 0.5)};
  w.groupings = {1, 1};
  w.label_vocab = 5;
  auto cells = [](double x0, double y0, double x1, double y1) {
    return Aabb{Vec3(0.5 * x0, 0.5 * y0, 0.0), Vec3(0.5 * x1, 0.5 * y1, 0.5)};
  };
  w.rooms = {{0, cells(1, 1, 11, 6)},
             {1, cells(12, 1, 23, 6)},
             {2, cells(1, 7, 11, 13)},
             {3, cells(12, 7, 23, 13)}};
  w.doors = {{0, 1, cells(11, 2, 12, 5)},
             {0, 2, cells(3, 6, 6, 7)},
             {2, 3, cells(11, 8, 12, 11)}};
  const int xy[13][2] = {{2, 2}, {8, 2}, {5, 4}, {9, 5}, {13, 2}, {18, 2},
                         {21, 4}, {2, 8}, {6, 11}, {9, 8}, {13, 8}, {17, 11},
                         {21, 9}};
  const int room_of[13] = {0, 0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3};
  for (int i = 0; i < 13; ++i)
    w.objects.push_back({i, cells(xy[i][0], xy[i][1], xy[i][0] + 1, xy[i][1] + 1),
                         2 + (i % 5), room_of[i]});
  return w;
}

/// Exact rasterization at the given pitch: cells default to wall, room
/// interiors and door openings are carved free, objects stamped occupied.
inline VoxelGrid rasterize(const World& w, double resolution) {
  if (resolution <= 0) throw std::invalid_argument("resolution must be positive");
  Vec3 extent = w.bounds.extent();
  int nx = static_cast<int>(std::lround(extent.x() / resolution));
  int ny = static_cast<int>(std::lround(extent.y() / resolution));
  int nz = static_cast<int>(std::lround(extent.z() / resolution));
  if (nx < 1 || ny < 1 || nz < 1) throw std::invalid_argument("grid degenerate at this resolution");
  VoxelGrid g(w.bounds.min, resolution, nx, ny, nz, VoxelState::Occupied);

  auto cell_range = [&](double lo, double hi, double org, int n) {
    int a = static_cast<int>(std::ceil((lo - org) / resolution - 0.5 - 1e-9));
    int b = static_cast<int>(std::floor((hi - org) / resolution - 0.5 + 1e-9));
    return std::pair{std::max(a, 0), std::min(b, n - 1)};
  };
  auto stamp = [&](const Aabb& box, VoxelState s, int32_t label, int64_t lm) {
    auto [x0, x1] = cell_range(box.min.x(), box.max.x(), g.origin().x(), nx);
    auto [y0, y1] = cell_range(box.min.y(), box.max.y(), g.origin().y(), ny);
    auto [z0, z1] = cell_range(box.min.z(), box.max.z(), g.origin().z(), nz);
    for (int z = z0; z <= z1; ++z)
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          VoxelIndex v{x, y, z};
          g.set_state(v, s);
          g.set_label(v, label);
          g.set_landmark(v, lm);
        }
  };

  for (size_t i = 0; i < g.num_cells(); ++i) {
    VoxelIndex v = g.from_linear(i);
    g.set_label(v, 1);  // wall until carved
  }
  for (const auto& r : w.rooms) stamp(r.interior, VoxelState::Free, 0, -1);
  for (const auto& d : w.doors) stamp(d.opening, VoxelState::Free, 0, -1);
  for (const auto& o : w.objects) stamp(o.box, VoxelState::Occupied, o.label, o.id);
  return g;
}

/// Room index for every free voxel; door voxels go to the lower room id.
/// Returns -1 for free voxels in neither (does not happen in generated worlds).
inline std::vector<int> gt_room_of_free_voxels(const World& w, const VoxelGrid& g) {
  std::vector<int> out(g.num_cells(), -1);
  for (size_t i = 0; i < g.num_cells(); ++i) {
    VoxelIndex v = g.from_linear(i);
    if (g.state(v) != VoxelState::Free) continue;
    Vec3 c = g.center(v);
    for (const auto& r : w.rooms)
      if (r.interior.contains(c)) {
        out[i] = r.id;
        break;
      }
    if (out[i] >= 0) continue;
    for (const auto& d : w.doors)
      if (d.opening.contains(c)) {
        out[i] = std::min(d.room_a, d.room_b);
        break;
      }
  }
  return out;
}

/// Ground-truth object/room/building graph used by the evaluator.
inline SceneGraph gt_scene_graph(const World& w) {
  SceneGraph g;
  std::vector<NodeId> room_ids;
  for (const auto& r : w.rooms) {
    RoomAttrs a;
    a.centroid = r.interior.center();
    room_ids.push_back(g.add_node(Layer::Rooms, a));
  }
  BuildingAttrs b;
  Vec3 c = Vec3::Zero();
  for (const auto& r : w.rooms) c += r.interior.center();
  if (!w.rooms.empty()) c /= static_cast<double>(w.rooms.size());
  b.centroid = c;
  NodeId bid = g.add_node(Layer::Building, b);
  for (NodeId rid : room_ids) g.add_edge(rid, bid);
  for (const auto& d : w.doors) g.add_edge(room_ids[d.room_a], room_ids[d.room_b]);
  for (const auto& o : w.objects) {
    ObjectAttrs a;
    a.centroid = o.box.center();
    a.bbox = o.box;
    a.label = o.label;
    g.add_node(Layer::ObjectsAgents, a);
  }
  return g;
}

inline std::string world_to_json(const World& w) {
  auto v3 = [](const Vec3& v) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "[%.17g,%.17g,%.17g]", v.x(), v.y(), v.z());
    return std::string(buf);
  };
  std::ostringstream os;
  os << "{\n\"version\": 1,\n";
  os << "\"bounds\": [" << v3(w.bounds.min) << "," << v3(w.bounds.max) << "],\n";
  {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", w.snap);
    os << "\"snap\": " << buf << ",\n\"label_vocab\": " << w.label_vocab << ",\n";
  }
  os << "\"groupings\": [";
  for (size_t i = 0; i < w.groupings.size(); ++i) os << (i ? "," : "") << w.groupings[i];
  os << "],\n\"rooms\": [";
  for (size_t i = 0; i < w.rooms.size(); ++i)
    os << (i ? ",\n" : "\n") << "{\"id\": " << w.rooms[i].id << ", \"box\": ["
       << v3(w.rooms[i].interior.min) << "," << v3(w.rooms[i].interior.max) << "]}";
  os << "],\n\"doors\": [";
  for (size_t i = 0; i < w.doors.size(); ++i)
    os << (i ? ",\n" : "\n") << "{\"a\": " << w.doors[i].room_a << ", \"b\": "
       << w.doors[i].room_b << ", \"box\": [" << v3(w.doors[i].opening.min) << ","
       << v3(w.doors[i].opening.max) << "]}";
  os << "],\n\"objects\": [";
  for (size_t i = 0; i < w.objects.size(); ++i)
    os << (i ? ",\n" : "\n") << "{\"id\": " << w.objects[i].id << ", \"box\": ["
       << v3(w.objects[i].box.min) << "," << v3(w.objects[i].box.max)
       << "], \"label\": " << w.objects[i].label << ", \"room\": " << w.objects[i].room << "}";
  os << "]\n}\n";
  return os.str();
}

inline World world_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("world parse error: ") + e.what());
  }
  auto v3 = [](const nlohmann::json& a) {
    return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
  };
  World w;
  w.bounds = {v3(j.at("bounds")[0]), v3(j.at("bounds")[1])};
  w.snap = j.at("snap").get<double>();
  w.label_vocab = j.at("label_vocab").get<int>();
  w.groupings.clear();
  for (const auto& gr : j.at("groupings")) w.groupings.push_back(gr.get<uint64_t>());
  for (const auto& r : j.at("rooms"))
    w.rooms.push_back({r.at("id").get<int>(), {v3(r.at("box")[0]), v3(r.at("box")[1])}});
  for (const auto& d : j.at("doors"))
    w.doors.push_back({d.at("a").get<int>(), d.at("b").get<int>(),
                       {v3(d.at("box")[0]), v3(d.at("box")[1])}});
  for (const auto& o : j.at("objects"))
    w.objects.push_back({o.at("id").get<int64_t>(),
                         {v3(o.at("box")[0]), v3(o.at("box")[1])},
                         o.at("label").get<int>(), o.at("room").get<int>()});
  return w;
}

}  // namespace atrium
