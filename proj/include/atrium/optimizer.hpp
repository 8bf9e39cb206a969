#pragma once

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "atrium/deformation_graph.hpp"
#include "atrium/se3.hpp"

namespace atrium {

struct LmConfig {
  int max_iterations = 50;
  double lambda_init = 1e-6;
  double lambda_shrink = 1.0 / 3.0;
  double lambda_grow = 4.0;
  double lambda_max = 1e12;
  double step_tol = 1e-10;     ///< converged when an accepted step is this small
  double cost_rel_tol = 1e-12; ///< or when the relative cost drop is
};

struct GncConfig {
  double inlier_cost = 1.0;       ///< squared residual bound for a clean closure
  double mu_update_factor = 1.6;  ///< annealing rate of the nonconvexity schedule
  int max_outer = 20;
  double weight_tol = 1e-3;  ///< stop once no weight moves more than this
};

struct OptimizeResult {
  std::map<NodeId, Se3> poses;
  bool converged = false;
  double final_cost = 0.0;
  int iterations = 0;                  ///< accepted solver steps, all rounds
  std::vector<double> cost_history;    ///< cost after each accepted step
  std::vector<double> closure_weights; ///< per closure edge, in input order
  std::vector<bool> closure_is_inlier;
};

namespace detail {

/// Residual of one relative-pose edge. With A = T_i^-1 T_j the residual
/// stacks the rotation difference A.R - E.R (column-major, scaled by
/// sqrt(rot_weight)) over the position difference A.t - E.t (scaled by
/// sqrt(trans_weight)). Jacobians are taken w.r.t. right perturbations
/// T <- T * exp([w; v]).
inline void edge_residual(const Se3& Ti, const Se3& Tj, const DefEdge& e, double robust_scale,
                          Eigen::Matrix<double, 12, 1>* r,
                          Eigen::Matrix<double, 12, 6>* Ji,
                          Eigen::Matrix<double, 12, 6>* Jj) {
  const Se3 A = Ti.inverse() * Tj;
  const Mat3 Ra = A.rotation();
  const Mat3 Re = e.measurement.rotation();
  const double sr = std::sqrt(e.rot_weight * robust_scale);
  const double st = std::sqrt(e.trans_weight * robust_scale);

  if (r) {
    Mat3 dR = Ra - Re;
    for (int c = 0; c < 3; ++c) r->segment<3>(3 * c) = sr * dR.col(c);
    r->tail<3>() = st * (A.t - e.measurement.t);
  }
  if (Jj) {
    Jj->setZero();
    for (int k = 0; k < 3; ++k) {
      Mat3 dR = Ra * skew(Vec3::Unit(k));  // d(A)/dw_j = A * G_k
      for (int c = 0; c < 3; ++c) Jj->block<3, 1>(3 * c, k) = sr * dR.col(c);
      Jj->block<3, 1>(9, 3 + k) = st * Ra.col(k);  // d(A.t)/dv_j = Ra e_k
    }
  }
  if (Ji) {
    Ji->setZero();
    for (int k = 0; k < 3; ++k) {
      Mat3 S = skew(Vec3::Unit(k));  // d(A)/dw_i = -G_k * A
      Mat3 dR = -S * Ra;
      for (int c = 0; c < 3; ++c) Ji->block<3, 1>(3 * c, k) = sr * dR.col(c);
      Ji->block<3, 1>(9, k) = st * (-S * A.t);
      Ji->block<3, 1>(9, 3 + k) = st * (-Vec3::Unit(k));  // d(A.t)/dv_i = -e_k
    }
  }
}

inline double edge_cost(const std::map<NodeId, Se3>& poses, const DefEdge& e,
                        double robust_scale) {
  Eigen::Matrix<double, 12, 1> r;
  edge_residual(poses.at(e.i), poses.at(e.j), e, robust_scale, &r, nullptr, nullptr);
  return r.squaredNorm();
}

inline double total_cost(const std::map<NodeId, Se3>& poses, const std::vector<DefEdge>& edges,
                         const std::vector<double>& robust_scales) {
  double c = 0.0;
  for (size_t k = 0; k < edges.size(); ++k) c += edge_cost(poses, edges[k], robust_scales[k]);
  return c;
}

/// Levenberg-Marquardt over the pose map with the gauge node held fixed.
/// Updates `poses` in place; appends accepted costs to `history`.
inline bool solve_lm(std::map<NodeId, Se3>& poses, const std::vector<DefEdge>& edges,
                     const std::vector<double>& robust_scales, NodeId gauge,
                     const LmConfig& cfg, std::vector<double>* history, int* steps) {
  std::map<NodeId, int> index;
  for (const auto& [n, _] : poses)
    if (n != gauge) index[n] = static_cast<int>(index.size());
  const int dim = static_cast<int>(index.size()) * 6;
  if (dim == 0) return true;

  double cost = total_cost(poses, edges, robust_scales);
  if (history) history->push_back(cost);
  double lambda = cfg.lambda_init;
  bool converged = false;

  Eigen::Matrix<double, 12, 1> r;
  Eigen::Matrix<double, 12, 6> Ji, Jj;

  for (int it = 0; it < cfg.max_iterations && !converged; ++it) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(edges.size() * 144);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);

    for (size_t k = 0; k < edges.size(); ++k) {
      const DefEdge& e = edges[k];
      if (robust_scales[k] <= 0.0) continue;
      auto ii = index.find(e.i);
      auto jj = index.find(e.j);
      edge_residual(poses.at(e.i), poses.at(e.j), e, robust_scales[k], &r,
                    ii != index.end() ? &Ji : nullptr, jj != index.end() ? &Jj : nullptr);
      auto add_block = [&](int row0, int col0, const Eigen::Matrix<double, 6, 6>& m) {
        for (int a = 0; a < 6; ++a)
          for (int c = 0; c < 6; ++c)
            if (m(a, c) != 0.0) trips.emplace_back(row0 + a, col0 + c, m(a, c));
      };
      if (ii != index.end()) {
        add_block(6 * ii->second, 6 * ii->second, Ji.transpose() * Ji);
        b.segment<6>(6 * ii->second) += Ji.transpose() * r;
      }
      if (jj != index.end()) {
        add_block(6 * jj->second, 6 * jj->second, Jj.transpose() * Jj);
        b.segment<6>(6 * jj->second) += Jj.transpose() * r;
      }
      if (ii != index.end() && jj != index.end()) {
        Eigen::Matrix<double, 6, 6> hij = Ji.transpose() * Jj;
        add_block(6 * ii->second, 6 * jj->second, hij);
        add_block(6 * jj->second, 6 * ii->second, hij.transpose());
      }
    }
    if (b.lpNorm<Eigen::Infinity>() < 1e-14) {
      converged = true;
      break;
    }

    bool accepted = false;
    while (!accepted && lambda <= cfg.lambda_max) {
      std::vector<Eigen::Triplet<double>> damped = trips;
      for (int d = 0; d < dim; ++d) damped.emplace_back(d, d, lambda);
      Eigen::SparseMatrix<double> H(dim, dim);
      H.setFromTriplets(damped.begin(), damped.end());
      Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(H);
      if (llt.info() != Eigen::Success) {
        lambda *= cfg.lambda_grow;
        continue;
      }
      Eigen::VectorXd dx = llt.solve(-b);
      if (!dx.allFinite()) throw std::runtime_error("pose solve produced non-finite step");

      std::map<NodeId, Se3> trial = poses;
      for (const auto& [n, i] : index) trial[n] = trial[n].retract(dx.segment<6>(6 * i));
      double trial_cost = total_cost(trial, edges, robust_scales);
      if (trial_cost < cost) {
        accepted = true;
        poses = std::move(trial);
        if (steps) ++*steps;
        if (history) history->push_back(trial_cost);
        double drop = cost - trial_cost;
        cost = trial_cost;
        lambda = std::max(lambda * cfg.lambda_shrink, 1e-12);
        if (dx.lpNorm<Eigen::Infinity>() < cfg.step_tol ||
            drop < cfg.cost_rel_tol * std::max(cost, 1.0))
          converged = true;
      } else {
        lambda *= cfg.lambda_grow;
      }
    }
    if (!accepted) break;  // damping exhausted; gradient is nonzero but steps fail
  }
  return converged;
}

}  // namespace detail

/// Optimize the deformation graph with the given loop closures appended.
/// Closure edges run through graduated non-convexity with a truncated
/// least-squares surrogate so gross outliers are identified and their
/// weight driven to zero; every other edge keeps unit weight throughout.
inline OptimizeResult optimize(const DeformationGraph& dg, const std::vector<DefEdge>& closures,
                               const LmConfig& lm = {}, const GncConfig& gnc = {}) {
  OptimizeResult out;
  out.poses.clear();
  for (const auto& [n, dn] : dg.nodes) out.poses[n] = dn.pose;

  std::vector<DefEdge> edges = dg.edges;
  edges.insert(edges.end(), closures.begin(), closures.end());
  const size_t base = dg.edges.size();
  std::vector<double> scales(edges.size(), 1.0);

  auto run_lm = [&]() {
    return detail::solve_lm(out.poses, edges, scales, dg.gauge, lm, &out.cost_history,
                            &out.iterations);
  };

  out.converged = run_lm();
  out.closure_weights.assign(closures.size(), 1.0);
  out.closure_is_inlier.assign(closures.size(), true);

  if (!closures.empty()) {
    const double c2 = gnc.inlier_cost;
    auto closure_sq = [&](size_t k) {
      return detail::edge_cost(out.poses, edges[base + k], 1.0);
    };
    double rmax = 0.0;
    for (size_t k = 0; k < closures.size(); ++k) rmax = std::max(rmax, closure_sq(k));

    if (2.0 * rmax > c2) {
      double mu = c2 / (2.0 * rmax - c2);
      for (int outer = 0; outer < gnc.max_outer; ++outer) {
        double moved = 0.0;
        for (size_t k = 0; k < closures.size(); ++k) {
          double r2 = closure_sq(k);
          double w;
          if (r2 >= (mu + 1.0) / mu * c2)
            w = 0.0;
          else if (r2 <= mu / (mu + 1.0) * c2)
            w = 1.0;
          else
            w = std::sqrt(c2 * mu * (mu + 1.0) / r2) - mu;
          moved = std::max(moved, std::abs(w - out.closure_weights[k]));
          out.closure_weights[k] = w;
          scales[base + k] = w;
        }
        if (outer > 0 && moved < gnc.weight_tol) break;
        out.converged = run_lm();
        mu *= gnc.mu_update_factor;
      }
    }
    for (size_t k = 0; k < closures.size(); ++k)
      out.closure_is_inlier[k] = out.closure_weights[k] >= 0.5;
  }

  out.final_cost = detail::total_cost(out.poses, edges, scales);
  return out;
}

}  // namespace atrium
