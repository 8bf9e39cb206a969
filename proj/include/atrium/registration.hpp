#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <random>
#include <vector>

#include "atrium/geometry.hpp"
#include "atrium/se3.hpp"

namespace atrium {

struct RegistrationParams {
  double inlier_threshold = 0.1;  ///< residual bound, meters
  int min_inliers = 5;
  int max_iterations = 200;  ///< random samples when exhaustive search is too big
  uint64_t seed = 7;
};

struct RigidFit {
  bool ok = false;
  Se3 transform;  ///< maps source points onto destination points
  std::vector<int> inliers;
};

/// Closed-form least-squares rigid fit (SVD of the cross-covariance):
/// dst_i ~= T * src_i.
inline Se3 fit_rigid(const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
  Vec3 cs = Vec3::Zero(), cd = Vec3::Zero();
  const size_t n = src.size();
  for (size_t i = 0; i < n; ++i) {
    cs += src[i];
    cd += dst[i];
  }
  cs /= double(n);
  cd /= double(n);
  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  for (size_t i = 0; i < n; ++i) H += (src[i] - cs) * (dst[i] - cd).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d R = svd.matrixV() * svd.matrixU().transpose();
  if (R.determinant() < 0) {
    Eigen::Matrix3d V = svd.matrixV();
    V.col(2) *= -1.0;
    R = V * svd.matrixU().transpose();
  }
  Se3 T;
  T.q = Eigen::Quaterniond(R).normalized();
  T.t = cd - R * cs;
  return T;
}

/// RANSAC over minimal 3-point samples with a closed-form fit per sample,
/// then refit on the consensus set. Correspondences are (source, destination).
inline RigidFit ransac_rigid(const std::vector<std::pair<Vec3, Vec3>>& corr,
                             const RegistrationParams& p = {}) {
  RigidFit best;
  const int n = static_cast<int>(corr.size());
  if (n < 3 || n < p.min_inliers) return best;

  auto count_inliers = [&](const Se3& T) {
    std::vector<int> in;
    for (int i = 0; i < n; ++i)
      if ((corr[i].second - T * corr[i].first).norm() <= p.inlier_threshold)
        in.push_back(i);
    return in;
  };
  auto try_sample = [&](int a, int b, int c) {
    Vec3 e1 = corr[b].first - corr[a].first;
    Vec3 e2 = corr[c].first - corr[a].first;
    if (e1.cross(e2).norm() < 1e-9) return;  // degenerate (collinear) sample
    Se3 T = fit_rigid({corr[a].first, corr[b].first, corr[c].first},
                      {corr[a].second, corr[b].second, corr[c].second});
    auto in = count_inliers(T);
    if (in.size() > best.inliers.size()) {
      best.inliers = std::move(in);
      best.transform = T;
    }
  };

  int64_t total = int64_t(n) * (n - 1) * (n - 2) / 6;
  if (total <= p.max_iterations) {
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        for (int c = b + 1; c < n; ++c) try_sample(a, b, c);
  } else {
    std::mt19937_64 rng(p.seed);
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int it = 0; it < p.max_iterations; ++it) {
      int a = pick(rng), b = pick(rng), c = pick(rng);
      if (a == b || b == c || a == c) continue;
      try_sample(a, b, c);
    }
  }

  if (static_cast<int>(best.inliers.size()) < p.min_inliers) return best;

  // refit on consensus until the inlier set stabilizes
  for (int round = 0; round < 3; ++round) {
    std::vector<Vec3> s, d;
    for (int i : best.inliers) {
      s.push_back(corr[i].first);
      d.push_back(corr[i].second);
    }
    Se3 T = fit_rigid(s, d);
    auto in = count_inliers(T);
    bool stable = in == best.inliers;
    best.transform = T;
    best.inliers = std::move(in);
    if (stable) break;
  }
  best.ok = static_cast<int>(best.inliers.size()) >= p.min_inliers;
  return best;
}

}  // namespace atrium
