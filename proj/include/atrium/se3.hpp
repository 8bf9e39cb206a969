#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>

#include "atrium/geometry.hpp"

namespace atrium {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline Mat3 skew(const Vec3& w) {
  Mat3 m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

/// Rigid transform in SE(3), stored as unit quaternion + translation.
/// Twist coordinates are ordered [rotation; translation].
struct Se3 {
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  Vec3 t = Vec3::Zero();

  static Se3 identity() { return {}; }

  static Se3 from_matrix(const Mat4& m) {
    Se3 out;
    out.q = Eigen::Quaterniond(Mat3(m.topLeftCorner<3, 3>())).normalized();
    out.t = m.topRightCorner<3, 1>();
    return out;
  }

  Mat3 rotation() const { return q.toRotationMatrix(); }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation();
    m.topRightCorner<3, 1>() = t;
    return m;
  }

  Se3 inverse() const {
    Se3 out;
    out.q = q.conjugate();
    out.t = -(out.q * t);
    return out;
  }

  Se3 operator*(const Se3& rhs) const {
    Se3 out;
    out.q = (q * rhs.q).normalized();
    out.t = t + q * rhs.t;
    return out;
  }

  Vec3 operator*(const Vec3& p) const { return q * p + t; }

  /// Exponential map from twist [w; v].
  static Se3 exp(const Vec6& xi) {
    Vec3 w = xi.head<3>();
    Vec3 v = xi.tail<3>();
    double theta = w.norm();
    Mat3 W = skew(w);
    Mat3 R, V;
    if (theta < 1e-10) {
      R = Mat3::Identity() + W + 0.5 * W * W;
      V = Mat3::Identity() + 0.5 * W + W * W / 6.0;
    } else {
      double a = std::sin(theta) / theta;
      double b = (1.0 - std::cos(theta)) / (theta * theta);
      double c = (1.0 - a) / (theta * theta);
      R = Mat3::Identity() + a * W + b * W * W;
      V = Mat3::Identity() + b * W + c * W * W;
    }
    Se3 out;
    out.q = Eigen::Quaterniond(R).normalized();
    out.t = V * v;
    return out;
  }

  /// Logarithm map to twist [w; v]; inverse of exp.
  Vec6 log() const {
    Eigen::AngleAxisd aa(q);
    Vec3 w = aa.angle() * aa.axis();
    double theta = aa.angle();
    Mat3 W = skew(w);
    Mat3 Vinv;
    if (theta < 1e-10) {
      Vinv = Mat3::Identity() - 0.5 * W + W * W / 12.0;
    } else {
      double half = 0.5 * theta;
      double cot = std::cos(half) / std::sin(half);
      double coef = (1.0 - half * cot) / (theta * theta);
      Vinv = Mat3::Identity() - 0.5 * W + coef * W * W;
    }
    Vec6 xi;
    xi.head<3>() = w;
    xi.tail<3>() = Vinv * t;
    return xi;
  }

  /// Right-multiplied retraction used by the optimizer.
  Se3 retract(const Vec6& xi) const { return *this * exp(xi); }
};

inline Se3 se3_from_yaw(double yaw, const Vec3& t) {
  Se3 out;
  out.q = Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
  out.t = t;
  return out;
}

/// Frobenius-norm distance between homogeneous transform matrices.
inline double se3_chordal_distance(const Se3& a, const Se3& b) {
  return (a.matrix() - b.matrix()).norm();
}

}  // namespace atrium
