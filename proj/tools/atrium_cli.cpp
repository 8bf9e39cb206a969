#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "atrium/config.hpp"
#include "atrium/esdf.hpp"
#include "atrium/hierarchical_td.hpp"
#include "atrium/htree.hpp"
#include "atrium/memory_model.hpp"
#include "atrium/metrics.hpp"
#include "atrium/pipeline.hpp"
#include "atrium/serialization.hpp"
#include "atrium/trajectory.hpp"
#include "atrium/world.hpp"

namespace fs = std::filesystem;
using namespace atrium;

namespace {

struct Settings {
  WorldParams world;
  double resolution = 0.1;
  TrajectoryParams traj;
  double drift_sigma_rot = 0.0;
  double drift_sigma_trans = 0.0;
  double map_margin = 1.0;
  uint64_t seed = 7;
  std::string out_dir = "out";
  PipelineParams pipe;
  double eval_object_threshold = 0.5;
  double eval_iou_threshold = 0.4;
  std::vector<int> eval_p_at_k = {1, 5};
};

Settings settings_from(const Config& c) {
  Settings s;
  auto& w = s.world;
  w.extent_x = c.get_double("world.extent_x", w.extent_x);
  w.extent_y = c.get_double("world.extent_y", w.extent_y);
  w.interior_height = c.get_double("world.interior_height", w.interior_height);
  w.wall_thickness = c.get_double("world.wall_thickness", w.wall_thickness);
  w.snap = c.get_double("world.snap", w.snap);
  w.room_count = static_cast<int>(c.get_int("world.room_count", w.room_count));
  w.min_room_dim = c.get_double("world.min_room_dim", w.min_room_dim);
  w.door_width_min = c.get_double("world.door_width_min", w.door_width_min);
  w.door_width_max = c.get_double("world.door_width_max", w.door_width_max);
  w.extra_door_prob = c.get_double("world.extra_door_prob", w.extra_door_prob);
  w.chain_layout = c.get_bool("world.chain_layout", w.chain_layout);
  w.objects_per_room_min =
      static_cast<int>(c.get_int("world.objects_per_room_min", w.objects_per_room_min));
  w.objects_per_room_max =
      static_cast<int>(c.get_int("world.objects_per_room_max", w.objects_per_room_max));
  w.object_min_extent = c.get_double("world.object_min_extent", w.object_min_extent);
  w.object_max_extent = c.get_double("world.object_max_extent", w.object_max_extent);
  w.object_min_height = c.get_double("world.object_min_height", w.object_min_height);
  w.object_max_height = c.get_double("world.object_max_height", w.object_max_height);
  w.object_wall_margin = c.get_double("world.object_wall_margin", w.object_wall_margin);
  w.object_separation = c.get_double("world.object_separation", w.object_separation);
  w.label_vocab = static_cast<int>(c.get_int("world.label_vocab", w.label_vocab));

  s.resolution = c.get_double("grid.resolution", s.resolution);

  auto& t = s.traj;
  t.agent_height = c.get_double("trajectory.agent_height", t.agent_height);
  t.step = c.get_double("trajectory.step", t.step);
  t.clearance = c.get_double("trajectory.clearance", t.clearance);
  t.revisit = c.get_bool("trajectory.revisit", t.revisit);
  t.dt = c.get_double("trajectory.dt", t.dt);
  s.drift_sigma_rot = c.get_double("trajectory.drift_sigma_rot", s.drift_sigma_rot);
  s.drift_sigma_trans = c.get_double("trajectory.drift_sigma_trans", s.drift_sigma_trans);

  auto& sp = s.pipe.sensor;
  sp.range = c.get_double("sensor.range", sp.range);
  sp.rays_azimuth = static_cast<int>(c.get_int("sensor.rays_azimuth", sp.rays_azimuth));
  sp.rays_elevation = static_cast<int>(c.get_int("sensor.rays_elevation", sp.rays_elevation));

  auto& fe = s.pipe.frontend;
  fe.resolution = s.resolution;
  fe.active_radius = c.get_double("frontend.active_radius", fe.active_radius);
  fe.window_margin = c.get_double("frontend.window_margin", fe.window_margin);
  fe.place_hash_cell = c.get_double("frontend.place_hash_cell", fe.place_hash_cell);
  fe.gvd.theta_min = c.get_double("frontend.theta_min", fe.gvd.theta_min);
  fe.gvd.min_basis = static_cast<int>(c.get_int("frontend.min_basis", fe.gvd.min_basis));
  fe.objects.cluster_eps = c.get_double("frontend.object_cluster_eps", fe.objects.cluster_eps);
  fe.objects.min_points =
      static_cast<int>(c.get_int("frontend.object_min_points", fe.objects.min_points));
  fe.objects.min_label =
      static_cast<int>(c.get_int("frontend.object_min_label", fe.objects.min_label));
  s.map_margin = c.get_double("frontend.map_margin", s.map_margin);

  auto& rm = s.pipe.rooms;
  rm.d_lo = c.get_double("rooms.d_lo", rm.d_lo);
  rm.d_hi = c.get_double("rooms.d_hi", rm.d_hi);
  rm.alpha = c.get_double("rooms.alpha", rm.alpha);
  rm.min_component_size =
      static_cast<int>(c.get_int("rooms.min_component_size", rm.min_component_size));
  rm.fallback_single_room = c.get_bool("rooms.fallback_single_room", rm.fallback_single_room);

  auto& dp = s.pipe.loop.descriptor;
  dp.radius_min = c.get_double("descriptors.radius_min", dp.radius_min);
  dp.radius_max = c.get_double("descriptors.radius_max", dp.radius_max);
  dp.radius_step = c.get_double("descriptors.radius_step", dp.radius_step);
  dp.min_nodes = static_cast<int>(c.get_int("descriptors.min_nodes", dp.min_nodes));
  dp.place_bin_width = c.get_double("descriptors.place_bin_width", dp.place_bin_width);
  dp.place_bin_limit = c.get_double("descriptors.place_bin_limit", dp.place_bin_limit);

  auto& mt = s.pipe.loop.thresholds;
  mt.tau_place = c.get_double("matching.tau_place", mt.tau_place);
  mt.tau_object = c.get_double("matching.tau_object", mt.tau_object);
  mt.tau_agent = c.get_double("matching.tau_agent", mt.tau_agent);
  mt.temporal_mask = c.get_int("matching.temporal_mask", mt.temporal_mask);

  auto& rg = s.pipe.loop.registration;
  rg.inlier_threshold = c.get_double("registration.inlier_threshold", rg.inlier_threshold);
  rg.min_inliers = static_cast<int>(c.get_int("registration.min_inliers", rg.min_inliers));
  rg.max_iterations =
      static_cast<int>(c.get_int("registration.max_iterations", rg.max_iterations));
  rg.seed = c.get_int("registration.seed", rg.seed);

  auto& df = s.pipe.deform;
  df.subsample_resolution =
      c.get_double("backend.subsample_resolution", df.subsample_resolution);
  df.edge_radius = c.get_double("backend.edge_radius", df.edge_radius);
  df.omega_t = c.get_double("backend.omega_t", df.omega_t);
  df.odom_rot_weight = c.get_double("backend.odom_weight", df.odom_rot_weight);
  df.odom_trans_weight = c.get_double("backend.odom_weight", df.odom_trans_weight);
  s.pipe.lm.max_iterations =
      static_cast<int>(c.get_int("backend.lm_max_iterations", s.pipe.lm.max_iterations));
  s.pipe.gnc.inlier_cost = c.get_double("backend.gnc_inlier_cost", s.pipe.gnc.inlier_cost);
  s.pipe.gnc.mu_update_factor =
      c.get_double("backend.gnc_mu_update_factor", s.pipe.gnc.mu_update_factor);
  s.pipe.gnc.max_outer =
      static_cast<int>(c.get_int("backend.gnc_max_outer", s.pipe.gnc.max_outer));
  s.pipe.place_merge_threshold =
      c.get_double("backend.place_merge_threshold", s.pipe.place_merge_threshold);

  s.pipe.slow_cadence = static_cast<int>(c.get_int("pipeline.slow_cadence", s.pipe.slow_cadence));
  s.pipe.loop_closures_enabled =
      c.get_bool("pipeline.loop_closures", s.pipe.loop_closures_enabled);
  s.pipe.injected_outlier_closures = static_cast<int>(
      c.get_int("pipeline.injected_outliers", s.pipe.injected_outlier_closures));
  s.pipe.injected_outlier_seed =
      static_cast<uint64_t>(c.get_int("pipeline.injected_outlier_seed",
                                      static_cast<int64_t>(s.pipe.injected_outlier_seed)));

  s.eval_object_threshold = c.get_double("eval.object_dist_threshold", s.eval_object_threshold);
  s.eval_iou_threshold = c.get_double("eval.iou_threshold", s.eval_iou_threshold);
  if (c.has("eval.p_at_k")) {
    s.eval_p_at_k.clear();
    std::istringstream ks(c.get_string("eval.p_at_k", ""));
    int k;
    while (ks >> k) s.eval_p_at_k.push_back(k);
  }

  s.seed = static_cast<uint64_t>(c.get_int("run.seed", static_cast<int64_t>(s.seed)));
  s.out_dir = c.get_string("run.out_dir", s.out_dir);

  // validate against module preconditions before any work starts
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(s.resolution > 0, "grid.resolution must be positive");
  require(w.room_count >= 1, "world.room_count must be at least 1");
  require(w.door_width_min <= w.door_width_max, "world door width range inverted");
  require(sp.range > 0, "sensor.range must be positive");
  require(fe.active_radius > 0, "frontend.active_radius must be positive");
  require(fe.gvd.min_basis >= 2, "frontend.min_basis must be at least 2");
  require(rm.d_lo < rm.d_hi, "rooms dilation range inverted");
  require(rm.alpha > 0 && rm.alpha <= 1, "rooms.alpha must be in (0, 1]");
  require(rm.min_component_size >= 1, "rooms.min_component_size must be positive");
  require(dp.radius_min <= dp.radius_max && dp.radius_step > 0,
          "descriptor radius schedule invalid");
  require(mt.tau_place > 0 && mt.tau_object > 0 && mt.tau_agent > 0,
          "matching thresholds must be positive");
  require(rg.inlier_threshold > 0, "registration.inlier_threshold must be positive");
  require(rg.min_inliers >= 3, "registration.min_inliers must be at least 3");
  require(df.subsample_resolution > 0, "backend.subsample_resolution must be positive");
  require(df.edge_radius > 0, "backend.edge_radius must be positive");
  require(s.pipe.gnc.inlier_cost > 0, "backend.gnc_inlier_cost must be positive");
  require(s.pipe.gnc.mu_update_factor > 1, "backend.gnc_mu_update_factor must exceed 1");
  require(s.eval_object_threshold > 0, "eval.object_dist_threshold must be positive");
  for (int k : s.eval_p_at_k) require(k >= 1, "eval.p_at_k entries must be positive");
  return s;
}

Aabb inflated(const Aabb& b, double m) {
  Aabb out = b;
  out.min -= Vec3::Constant(m);
  out.max += Vec3::Constant(m);
  return out;
}

std::string closures_csv(const PipelineResult& r) {
  std::ostringstream os;
  os << "query,match,source,inliers,is_inlier,tx,ty,tz,qx,qy,qz,qw\n";
  for (size_t i = 0; i < r.closures.size(); ++i) {
    const LoopClosure& lc = r.closures[i];
    const Se3& p = lc.relative_pose;
    os << lc.query << ',' << lc.match << ','
       << (lc.source == ClosureSource::AppearanceRegistration ? "appearance" : "object") << ','
       << lc.inliers << ','
       << (i < r.closure_is_inlier.size() && r.closure_is_inlier[i] ? 1 : 0) << ',' << p.t.x()
       << ',' << p.t.y() << ',' << p.t.z() << ',' << p.q.x() << ',' << p.q.y() << ','
       << p.q.z() << ',' << p.q.w() << '\n';
  }
  return os.str();
}

nlohmann::json descriptor_to_json(const HierarchicalDescriptor& d) {
  nlohmann::json j;
  j["agent"] = d.agent_node;
  j["keyframe"] = d.keyframe;
  j["center"] = {d.center.x(), d.center.y(), d.center.z()};
  nlohmann::json app = nlohmann::json::object();
  for (const auto& [id, v] : d.appearance) app[std::to_string(id)] = v;
  j["appearance"] = app;
  nlohmann::json oh = nlohmann::json::object();
  for (const auto& [label, v] : d.object_hist) oh[std::to_string(label)] = v;
  j["object_hist"] = oh;
  j["place_hist"] = std::vector<double>(d.place_hist.data(),
                                        d.place_hist.data() + d.place_hist.size());
  j["bbox_min"] = {d.subgraph_bbox.min.x(), d.subgraph_bbox.min.y(), d.subgraph_bbox.min.z()};
  j["bbox_max"] = {d.subgraph_bbox.max.x(), d.subgraph_bbox.max.y(), d.subgraph_bbox.max.z()};
  return j;
}

HierarchicalDescriptor descriptor_from_json(const nlohmann::json& j) {
  HierarchicalDescriptor d;
  d.agent_node = j.at("agent").get<NodeId>();
  d.keyframe = j.at("keyframe").get<int64_t>();
  d.center = Vec3(j.at("center")[0], j.at("center")[1], j.at("center")[2]);
  for (auto it = j.at("appearance").begin(); it != j.at("appearance").end(); ++it)
    d.appearance[std::stoll(it.key())] = it.value().get<double>();
  for (auto it = j.at("object_hist").begin(); it != j.at("object_hist").end(); ++it)
    d.object_hist[std::stoi(it.key())] = it.value().get<double>();
  auto ph = j.at("place_hist").get<std::vector<double>>();
  d.place_hist = Eigen::Map<Eigen::VectorXd>(ph.data(), static_cast<long>(ph.size()));
  d.subgraph_bbox.min = Vec3(j.at("bbox_min")[0], j.at("bbox_min")[1], j.at("bbox_min")[2]);
  d.subgraph_bbox.max = Vec3(j.at("bbox_max")[0], j.at("bbox_max")[1], j.at("bbox_max")[2]);
  return d;
}

int cmd_generate(const Settings& s) {
  fs::create_directories(s.out_dir);
  World w = generate_world(s.world, s.seed);
  VoxelGrid grid = rasterize(w, s.resolution);
  Trajectory gt = generate_trajectory(w, grid, s.traj, s.seed);
  Trajectory odom = apply_drift(gt, s.drift_sigma_rot, s.drift_sigma_trans, s.seed + 1);

  save_text((fs::path(s.out_dir) / "world.json").string(), world_to_json(w));
  grid.save((fs::path(s.out_dir) / "grid.bin").string());
  save_text((fs::path(s.out_dir) / "traj_gt.txt").string(), trajectory_to_text(gt));
  save_text((fs::path(s.out_dir) / "traj_odom.txt").string(), trajectory_to_text(odom));
  std::cout << "generate seed=" << s.seed << " rooms=" << w.rooms.size()
            << " objects=" << w.objects.size() << " keyframes=" << gt.size()
            << " out=" << s.out_dir << "\n";
  return 0;
}

int cmd_run(const Settings& s) {
  fs::path dir(s.out_dir);
  World w = world_from_json(load_text((dir / "world.json").string()));
  VoxelGrid grid = VoxelGrid::load((dir / "grid.bin").string());
  Trajectory gt = trajectory_from_text(load_text((dir / "traj_gt.txt").string()));
  Trajectory odom = trajectory_from_text(load_text((dir / "traj_odom.txt").string()));

  PipelineParams p = s.pipe;
  p.frontend.map_bounds = inflated(w.bounds, s.map_margin);
  PipelineResult r = run_pipeline(grid, gt, odom, p);

  save_text((dir / "scene_graph.json").string(), to_json(r.corrected));
  save_text((dir / "frontend_graph.json").string(), to_json(r.frontend_graph));
  save_text((dir / "traj_est.txt").string(), trajectory_to_text(r.corrected_trajectory));
  save_text((dir / "closures.csv").string(), closures_csv(r));
  {
    nlohmann::json ds = nlohmann::json::array();
    for (const auto& d : r.descriptors) ds.push_back(descriptor_to_json(d));
    save_text((dir / "descriptors.json").string(), ds.dump(2) + "\n");
  }
  nlohmann::json rep;
  rep["slow_stages"] = r.slow_stages;
  rep["closures"] = r.closures.size();
  rep["optimizer_converged"] = r.optimizer_converged;
  rep["rooms"] = r.rooms.num_rooms;
  rep["room_delta_star"] = r.rooms.delta_star;
  rep["room_fell_back"] = r.rooms.fell_back;
  rep["unassigned_places"] = r.rooms.unassigned_places;
  nlohmann::json rt = nlohmann::json::object();
  for (const auto& [stage, ms] : r.runtimes_ms) rt[stage] = ms;
  rep["runtimes_ms"] = rt;
  save_text((dir / "run_report.json").string(), rep.dump(2) + "\n");

  std::cout << "run keyframes=" << gt.size() << " closures=" << r.closures.size()
            << " rooms=" << r.rooms.num_rooms << " slow_stages=" << r.slow_stages
            << " converged=" << (r.optimizer_converged ? 1 : 0) << " out=" << s.out_dir
            << "\n";
  return 0;
}

int cmd_eval(const Settings& s) {
  fs::path dir(s.out_dir);
  World w = world_from_json(load_text((dir / "world.json").string()));
  VoxelGrid grid = VoxelGrid::load((dir / "grid.bin").string());
  Trajectory gt = trajectory_from_text(load_text((dir / "traj_gt.txt").string()));
  Trajectory est = trajectory_from_text(load_text((dir / "traj_est.txt").string()));
  SceneGraph graph = scene_graph_from_json(load_text((dir / "scene_graph.json").string()));

  MetricsReport rep;
  ObjectMetrics om =
      object_metrics(object_samples(graph), object_samples(w), s.eval_object_threshold);
  rep.object_found_pct = om.found_pct;
  rep.object_correct_pct = om.correct_pct;

  EsdfField gt_esdf = compute_esdf(grid);
  GvdParams gvd_ref;
  gvd_ref.theta_min = 0.0;  // unfiltered reference skeleton
  gvd_ref.min_basis = 2;
  auto gt_gvd = extract_gvd(grid, gt_esdf, gvd_ref);
  rep.place_position_error_mean = place_position_error(place_positions(graph), gt_gvd);

  auto est_rooms = room_voxels_from_graph(graph, grid);
  auto gt_rooms = room_voxels_from_world(w, grid);
  if (!est_rooms.empty() && !gt_rooms.empty()) {
    RoomPr pr = room_pr(est_rooms, gt_rooms);
    rep.room_precision = pr.precision;
    rep.room_recall = pr.recall;
  }

  rep.ate_rmse = ate_rmse(est, gt);

  fs::path dpath = dir / "descriptors.json";
  if (fs::exists(dpath)) {
    auto arr = nlohmann::json::parse(load_text(dpath.string()));
    std::vector<HierarchicalDescriptor> descs;
    for (const auto& j : arr) descs.push_back(descriptor_from_json(j));
    for (int k : s.eval_p_at_k)
      if (static_cast<int>(descs.size()) >= k + 1)
        rep.descriptor_p_at_k[k] = descriptor_p_at_k(descs, k, s.eval_iou_threshold);
  }

  rep.memory_symbols["flat"] = memory_flat(grid.num_cells(), w.label_layers()).symbols;
  rep.memory_symbols["hierarchical"] =
      memory_hierarchical(grid.num_cells(), w.grouping_counts()).symbols;
  rep.memory_symbols["scene_graph"] = memory_compressed(graph).symbols;

  save_text((dir / "metrics.json").string(), to_json(rep));
  save_text((dir / "metrics.csv").string(), to_csv(rep));
  std::cout << "eval room_precision=" << rep.room_precision
            << " room_recall=" << rep.room_recall << " ate_rmse=" << rep.ate_rmse
            << " place_err=" << rep.place_position_error_mean << " out=" << s.out_dir << "\n";
  return 0;
}

int cmd_decompose(const std::string& graph_file, const std::string& batch_dir,
                  bool hierarchical, const std::string& heuristic_name, bool htree,
                  const std::string& out_dir) {
  Heuristic h = heuristic_name == "min_fill" ? Heuristic::MinFill : Heuristic::MinDegree;
  auto decompose_one = [&](const std::string& path) {
    SceneGraph g = scene_graph_from_json(load_text(path));
    HierGraph hier = extract_object_room_graph(g);
    TreeDecomposition td =
        hierarchical ? td_hierarchical(hier, h) : td_heuristic(simple_from_hier(hier), h);
    return std::pair<HierGraph, TreeDecomposition>{std::move(hier), std::move(td)};
  };

  fs::create_directories(out_dir);
  if (!batch_dir.empty()) {
    std::map<int, int> histogram;
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(batch_dir))
      if (e.path().extension() == ".json") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no .json graphs in " + batch_dir);
    for (const auto& f : files) ++histogram[decompose_one(f).second.width()];
    std::ostringstream csv;
    csv << "width,count\n";
    for (const auto& [wd, n] : histogram) csv << wd << ',' << n << '\n';
    save_text((fs::path(out_dir) / "width_histogram.csv").string(), csv.str());
    std::cout << "decompose batch graphs=" << files.size() << " out=" << out_dir << "\n";
    return 0;
  }

  auto [hier, td] = decompose_one(graph_file);
  save_text((fs::path(out_dir) / "td.json").string(), to_json(td));
  if (htree) {
    HTree ht = build_htree(hier, h);
    save_text((fs::path(out_dir) / "htree.json").string(), to_json(ht));
  }
  std::cout << "decompose width=" << td.width() << " bags=" << td.bags.size()
            << " out=" << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical scene graph construction and evaluation"};
  app.require_subcommand(1);

  std::string config_path, out_override, graph_file, batch_dir, heuristic = "min_degree";
  int64_t seed_override = -1;
  int cadence_override = -1;
  bool no_loop_closures = false, hierarchical = false, htree = false;
  double drift_rot_override = -1.0, drift_trans_override = -1.0;

  app.add_option("--config", config_path, "configuration file");
  app.add_option("--seed", seed_override, "override run.seed");
  app.add_option("--out", out_override, "override run.out_dir");

  auto* gen = app.add_subcommand("generate", "synthesize a world + trajectories");
  gen->add_option("--drift-sigma-rot", drift_rot_override, "odometry rotation noise (rad/step)");
  gen->add_option("--drift-sigma-trans", drift_trans_override,
                  "odometry translation noise (m/step)");

  auto* run = app.add_subcommand("run", "run the mapping pipeline on generated files");
  run->add_option("--keyframe-cadence", cadence_override, "slow stage period in keyframes");
  run->add_flag("--no-loop-closures", no_loop_closures, "disable detection and correction");

  app.add_subcommand("eval", "score a run against its world's ground truth");

  auto* dec = app.add_subcommand("decompose", "tree-decompose a scene graph file");
  dec->add_option("--graph", graph_file, "scene graph JSON file");
  dec->add_option("--batch", batch_dir, "directory of scene graph JSON files");
  dec->add_flag("--hierarchical", hierarchical, "layer-by-layer decomposition");
  dec->add_option("--heuristic", heuristic, "min_degree or min_fill")
      ->check(CLI::IsMember({"min_degree", "min_fill"}));
  dec->add_flag("--htree", htree, "also emit the refined message-passing tree");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Config cfg;
    if (!config_path.empty()) cfg = Config::load(config_path);
    Settings s = settings_from(cfg);
    if (seed_override >= 0) s.seed = static_cast<uint64_t>(seed_override);
    if (!out_override.empty()) s.out_dir = out_override;
    if (cadence_override > 0) s.pipe.slow_cadence = cadence_override;
    if (no_loop_closures) s.pipe.loop_closures_enabled = false;
    if (drift_rot_override >= 0) s.drift_sigma_rot = drift_rot_override;
    if (drift_trans_override >= 0) s.drift_sigma_trans = drift_trans_override;

    if (gen->parsed()) return cmd_generate(s);
    if (run->parsed()) return cmd_run(s);
    if (app.get_subcommand("eval")->parsed()) return cmd_eval(s);
    if (dec->parsed()) {
      if (graph_file.empty() && batch_dir.empty())
        throw ConfigError("decompose needs --graph or --batch");
      return cmd_decompose(graph_file, batch_dir, hierarchical, heuristic, htree, s.out_dir);
    }
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
