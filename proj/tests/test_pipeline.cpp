#include <catch2/catch_amalgamated.hpp>

#include "atrium/metrics.hpp"
#include "atrium/pipeline.hpp"
#include "atrium/world.hpp"
#include "test_helpers.hpp"

using namespace atrium;

namespace {

struct Setup {
  World world;
  VoxelGrid grid;
  Trajectory gt;
  PipelineParams params;
};

Setup make_setup(uint64_t seed) {
  Setup s;
  s.world = generate_world(testing::small_world_params(), seed);
  s.grid = rasterize(s.world, 0.1);
  s.gt = generate_trajectory(s.world, s.grid, TrajectoryParams{}, seed);
  s.params.frontend.map_bounds = s.world.bounds;
  s.params.frontend.map_bounds.min -= Vec3::Constant(1.0);
  s.params.frontend.map_bounds.max += Vec3::Constant(1.0);
  s.params.frontend.resolution = 0.1;
  return s;
}

}  // namespace

TEST_CASE("a clean run reproduces the trajectory and builds all layers") {
  Setup s = make_setup(101);
  PipelineResult res = run_pipeline(s.grid, s.gt, s.gt, s.params);

  REQUIRE(res.corrected_trajectory.size() == s.gt.size());
  REQUIRE(res.slow_stages >= 1);
  REQUIRE(res.optimizer_converged);
  for (Layer l : {Layer::Mesh, Layer::ObjectsAgents, Layer::Places, Layer::Rooms,
                  Layer::Building})
    REQUIRE_FALSE(res.corrected.nodes_in_layer(l).empty());
  REQUIRE(res.rooms.num_rooms >= 1);
  REQUIRE_FALSE(res.descriptors.empty());
  REQUIRE(res.corrected.validate_hierarchy().ok());

  // perfect odometry: every measurement is consistent, nothing should move
  REQUIRE(ate_rmse(res.corrected_trajectory, s.gt) < 1e-6);
  for (const auto& ms : res.runtimes_ms) REQUIRE(ms.second >= 0.0);
  REQUIRE(res.runtimes_ms.count("frontend") == 1);
  REQUIRE(res.runtimes_ms.count("rooms") == 1);
}

TEST_CASE("disabling closures leaves the frontend graph untouched") {
  Setup s = make_setup(102);
  s.params.loop_closures_enabled = false;
  PipelineResult res = run_pipeline(s.grid, s.gt, s.gt, s.params);

  REQUIRE(res.closures.empty());
  REQUIRE(res.descriptors.empty());
  // the published graph is the frontend state plus the room layer
  for (Layer l : {Layer::Mesh, Layer::ObjectsAgents, Layer::Places}) {
    REQUIRE(res.corrected.nodes_in_layer(l) == res.frontend_graph.nodes_in_layer(l));
    for (NodeId n : res.corrected.nodes_in_layer(l)) {
      Vec3 a = node_position(res.corrected.node(n).attrs);
      Vec3 b = node_position(res.frontend_graph.node(n).attrs);
      REQUIRE((a - b).norm() == 0.0);
    }
  }
  REQUIRE_FALSE(res.corrected.nodes_in_layer(Layer::Rooms).empty());
  REQUIRE(res.frontend_graph.nodes_in_layer(Layer::Rooms).empty());
  for (size_t k = 0; k < s.gt.size(); ++k)
    REQUIRE((res.corrected_trajectory.poses[k].t - s.gt.poses[k].t).norm() == 0.0);
}

TEST_CASE("loop closures pull a drifted trajectory back") {
  Setup s = make_setup(103);
  Trajectory odom = apply_drift(s.gt, 0.0, 0.01, 104);
  double drift_ate = ate_rmse(odom, s.gt);
  REQUIRE(drift_ate > 0.01);  // the walk has to have drifted for the test to bite

  s.params.injected_outlier_closures = 3;
  PipelineResult res = run_pipeline(s.grid, s.gt, odom, s.params);

  REQUIRE_FALSE(res.closures.empty());
  double corrected_ate = ate_rmse(res.corrected_trajectory, s.gt);
  REQUIRE(corrected_ate < drift_ate);

  REQUIRE(res.injected_is_inlier.size() == 3);
  for (bool inlier : res.injected_is_inlier) REQUIRE_FALSE(inlier);
  REQUIRE(res.closure_is_inlier.size() == res.closures.size());

  size_t genuine_inliers = 0;
  for (bool b : res.closure_is_inlier) genuine_inliers += b ? 1 : 0;
  REQUIRE(genuine_inliers > 0);
  REQUIRE(res.runtimes_ms.count("optimize") == 1);
  REQUIRE(res.runtimes_ms.count("loop_detect") == 1);
}

TEST_CASE("closures carry verifiable registrations") {
  Setup s = make_setup(105);
  Trajectory odom = apply_drift(s.gt, 0.0, 0.01, 106);
  PipelineResult res = run_pipeline(s.grid, s.gt, odom, s.params);
  std::map<int64_t, size_t> kf_index;
  for (size_t k = 0; k < odom.size(); ++k) kf_index[int64_t(k)] = k;

  for (const auto& lc : res.closures) {
    REQUIRE(lc.query != lc.match);
    REQUIRE(lc.inliers >= s.params.loop.registration.min_inliers);
    // the measured relative pose must match ground truth: observations are
    // exact, so registration recovers the true motion between keyframes
    const auto& qa = std::get<AgentAttrs>(res.frontend_graph.node(lc.query).attrs);
    const auto& ma = std::get<AgentAttrs>(res.frontend_graph.node(lc.match).attrs);
    Se3 gt_rel = s.gt.poses[kf_index.at(qa.keyframe)].inverse() *
                 s.gt.poses[kf_index.at(ma.keyframe)];
    REQUIRE((lc.relative_pose.t - gt_rel.t).norm() < 1e-6);
    REQUIRE(lc.relative_pose.q.angularDistance(gt_rel.q) < 1e-6);
  }
}
