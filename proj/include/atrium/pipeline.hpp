#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "atrium/deformation_graph.hpp"
#include "atrium/frontend.hpp"
#include "atrium/interpolation.hpp"
#include "atrium/loop_closure.hpp"
#include "atrium/observation.hpp"
#include "atrium/optimizer.hpp"
#include "atrium/reconcile.hpp"
#include "atrium/rooms.hpp"
#include "atrium/trajectory.hpp"

namespace atrium {

struct PipelineParams {
  FrontendConfig frontend;
  SensorParams sensor;
  LoopClosureConfig loop;
  RoomSegmentationParams rooms;
  DeformationGraphParams deform;
  LmConfig lm;
  GncConfig gnc;
  int slow_cadence = 20;  ///< run the slow stage every this many keyframes
  bool loop_closures_enabled = true;
  double place_merge_threshold = 0.4;
  int injected_outlier_closures = 0;  ///< wrong closures added at the final stage
  uint64_t injected_outlier_seed = 99;
};

struct PipelineResult {
  SceneGraph frontend_graph;  ///< odometry-frame graph, never optimized
  SceneGraph corrected;       ///< last published backend output
  Trajectory corrected_trajectory;
  std::vector<LoopClosure> closures;
  std::vector<bool> closure_is_inlier;
  std::vector<bool> injected_is_inlier;
  RoomSegmentationReport rooms;
  ReconcileReport reconcile_report;
  bool optimizer_converged = true;
  size_t slow_stages = 0;
  std::map<std::string, double> runtimes_ms;
  std::vector<HierarchicalDescriptor> descriptors;
};

namespace detail {

inline double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

/// Implausible closures between random far-apart agents, for vetting the
/// robust loss: each gets a large random relative translation.
inline std::vector<DefEdge> make_injected_closures(const SceneGraph& g, int count,
                                                   uint64_t seed, int64_t min_gap) {
  std::vector<std::pair<int64_t, NodeId>> agents;
  for (NodeId n : g.nodes_in_layer(Layer::ObjectsAgents))
    if (const auto* a = std::get_if<AgentAttrs>(&g.node(n).attrs))
      agents.push_back({a->keyframe, n});
  std::sort(agents.begin(), agents.end());
  std::vector<DefEdge> out;
  if (agents.size() < 2) return out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick(0, agents.size() - 1);
  std::uniform_real_distribution<double> offs(-6.0, 6.0);
  std::uniform_real_distribution<double> yaw(0.0, 2.0 * M_PI);
  int guard = 0;
  while (static_cast<int>(out.size()) < count && guard++ < 1000) {
    size_t a = pick(rng), b = pick(rng);
    if (a == b || std::abs(agents[a].first - agents[b].first) <= min_gap) continue;
    Se3 bogus = se3_from_yaw(yaw(rng), Vec3(offs(rng), offs(rng), offs(rng)));
    out.push_back({agents[a].second, agents[b].second, bogus, 10.0, 10.0,
                   DefEdgeFamily::Closure});
  }
  return out;
}

}  // namespace detail

/// Frontend + backend over a prerecorded trajectory pair. Observations are
/// rendered in the ground-truth world at the true poses and integrated at the
/// odometry poses, so the map inherits exactly the trajectory's drift.
///
/// The slow stage (closure detection, optimization, interpolation, reconcile,
/// rooms) runs in a worker thread on an immutable snapshot while the next
/// keyframe is rendered and integrated; it is joined and merged before the
/// detector ingests that keyframe, so runs are deterministic regardless of
/// thread timing.
class Pipeline {
 public:
  explicit Pipeline(const PipelineParams& p)
      : params_(p), frontend_(p.frontend), detector_(p.loop) {}

  PipelineResult run(const VoxelGrid& gt_grid, const Trajectory& gt,
                     const Trajectory& odom) {
    if (gt.size() != odom.size())
      throw std::invalid_argument("trajectory length mismatch");
    PipelineResult res;

    for (size_t k = 0; k < gt.size(); ++k) {
      auto t0 = std::chrono::steady_clock::now();
      Observation obs = render_observation(gt_grid, gt.poses[k], params_.sensor);
      obs = transform_observation(obs, gt.poses[k].inverse());  // to sensor frame
      double render_ms = detail::ms_since(t0);

      t0 = std::chrono::steady_clock::now();
      auto stats = frontend_.integrate(odom.poses[k], obs, static_cast<int64_t>(k));
      double frontend_ms = detail::ms_since(t0);

      join_and_merge(res);  // slow results land before this keyframe's descriptor
      res.runtimes_ms["render"] += render_ms;
      res.runtimes_ms["frontend"] += frontend_ms;

      if (params_.loop_closures_enabled) {
        t0 = std::chrono::steady_clock::now();
        detector_.add_keyframe(frontend_.graph(), stats.agent,
                               frontend_.anchors().at(stats.agent));
        res.runtimes_ms["descriptors"] += detail::ms_since(t0);
      }

      bool boundary = params_.slow_cadence > 0 && k > 0 && k + 1 < gt.size() &&
                      k % static_cast<size_t>(params_.slow_cadence) == 0;
      if (boundary) {
        SceneGraph snap = frontend_.snapshot();
        auto clearance = frontend_.place_edge_clearance();
        worker_ = std::thread([this, snap = std::move(snap),
                               clearance = std::move(clearance), k] {
          try {
            outcome_ = std::make_unique<SlowOutcome>(
                compute_slow(snap, std::move(clearance), false));
          } catch (const std::exception& e) {
            stage_error_ = "slow stage at keyframe " + std::to_string(k) + ": " + e.what();
          }
        });
      }
    }
    join_and_merge(res);

    auto t0 = std::chrono::steady_clock::now();
    frontend_.refresh_full();
    res.runtimes_ms["frontend"] += detail::ms_since(t0);
    try {
      outcome_ = std::make_unique<SlowOutcome>(
          compute_slow(frontend_.snapshot(), frontend_.place_edge_clearance(), true));
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("final slow stage: ") + e.what());
    }
    merge_outcome(res);

    res.frontend_graph = frontend_.snapshot();
    res.corrected = published_valid_ ? published_ : res.frontend_graph;
    res.corrected_trajectory = corrected_trajectory(odom);
    res.descriptors = detector_.database();
    return res;
  }

  const Frontend& frontend() const { return frontend_; }

 private:
  struct SlowOutcome {
    std::vector<LoopClosure> fresh_closures;
    SceneGraph corrected;
    std::map<NodeId, Se3> optimized;
    bool backend_ran = false;
    bool optimizer_converged = true;
    std::vector<bool> closure_is_inlier;
    std::vector<bool> injected_is_inlier;
    RoomSegmentationReport rooms;
    ReconcileReport reconcile_report;
    std::map<std::string, double> runtimes_ms;
  };

  /// Runs on the worker thread. Reads the detector (whose ingest is paused
  /// until the join) and the closure history; all results go into the
  /// returned outcome, merged by the main thread.
  SlowOutcome compute_slow(const SceneGraph& snapshot,
                           std::map<std::pair<NodeId, NodeId>, double> clearance,
                           bool final_stage) {
    SlowOutcome out;
    if (params_.loop_closures_enabled) {
      auto t0 = std::chrono::steady_clock::now();
      out.fresh_closures = detector_.detect_batch(snapshot);
      out.runtimes_ms["loop_detect"] += detail::ms_since(t0);
    }
    std::vector<LoopClosure> all = closures_;
    all.insert(all.end(), out.fresh_closures.begin(), out.fresh_closures.end());

    std::vector<DefEdge> injected;
    if (final_stage && params_.injected_outlier_closures > 0)
      injected = detail::make_injected_closures(
          snapshot, params_.injected_outlier_closures, params_.injected_outlier_seed,
          params_.loop.thresholds.temporal_mask);

    out.corrected = snapshot.snapshot();
    if (!all.empty() || !injected.empty()) {
      auto t0 = std::chrono::steady_clock::now();
      DeformationGraph dg = build_deformation_graph(snapshot, params_.deform);
      std::vector<DefEdge> extra = closure_edges(all);
      size_t real = extra.size();
      extra.insert(extra.end(), injected.begin(), injected.end());
      OptimizeResult opt = optimize(dg, extra, params_.lm, params_.gnc);
      out.backend_ran = true;
      out.optimizer_converged = opt.converged;
      out.closure_is_inlier.assign(opt.closure_is_inlier.begin(),
                                   opt.closure_is_inlier.begin() + real);
      out.injected_is_inlier.assign(opt.closure_is_inlier.begin() + real,
                                    opt.closure_is_inlier.end());
      out.optimized = opt.poses;
      out.runtimes_ms["optimize"] += detail::ms_since(t0);

      t0 = std::chrono::steady_clock::now();
      InterpolationParams ip;
      ip.control_cell = params_.deform.subsample_resolution;
      out.corrected = apply_deformation(snapshot, dg, opt.poses, ip);
      out.runtimes_ms["interpolate"] += detail::ms_since(t0);

      t0 = std::chrono::steady_clock::now();
      out.reconcile_report = reconcile(out.corrected, params_.rooms, &clearance,
                                       params_.place_merge_threshold);
      out.rooms = out.reconcile_report.rooms;
      out.runtimes_ms["reconcile"] += detail::ms_since(t0);
    } else {
      auto t0 = std::chrono::steady_clock::now();
      out.rooms = segment_rooms(out.corrected, params_.rooms, &clearance);
      out.runtimes_ms["rooms"] += detail::ms_since(t0);
    }
    return out;
  }

  void join_and_merge(PipelineResult& res) {
    if (worker_.joinable()) worker_.join();
    if (!stage_error_.empty()) throw std::runtime_error(stage_error_);
    merge_outcome(res);
  }

  void merge_outcome(PipelineResult& res) {
    if (!outcome_) return;
    SlowOutcome& o = *outcome_;
    ++res.slow_stages;
    closures_.insert(closures_.end(), o.fresh_closures.begin(), o.fresh_closures.end());
    res.closures = closures_;
    if (o.backend_ran) {
      res.optimizer_converged = o.optimizer_converged;
      res.closure_is_inlier = o.closure_is_inlier;
      res.injected_is_inlier = o.injected_is_inlier;
      last_optimized_ = o.optimized;
    }
    res.rooms = o.rooms;
    res.reconcile_report = o.reconcile_report;
    for (const auto& [stage, ms] : o.runtimes_ms) res.runtimes_ms[stage] += ms;
    published_ = o.corrected;
    published_valid_ = true;
    outcome_.reset();
  }

  Trajectory corrected_trajectory(const Trajectory& odom) const {
    Trajectory out;
    out.timestamps = odom.timestamps;
    const auto& agents = frontend_.agents();
    for (size_t k = 0; k < agents.size(); ++k) {
      auto it = last_optimized_.find(agents[k]);
      out.poses.push_back(it != last_optimized_.end() ? it->second : odom.poses[k]);
    }
    return out;
  }

  PipelineParams params_;
  Frontend frontend_;
  LoopClosureDetector detector_;
  std::vector<LoopClosure> closures_;
  std::map<NodeId, Se3> last_optimized_;
  SceneGraph published_;
  bool published_valid_ = false;
  std::thread worker_;
  std::unique_ptr<SlowOutcome> outcome_;
  std::string stage_error_;
};

inline PipelineResult run_pipeline(const VoxelGrid& gt_grid, const Trajectory& gt,
                                   const Trajectory& odom, const PipelineParams& params) {
  Pipeline p(params);
  return p.run(gt_grid, gt, odom);
}

}  // namespace atrium
