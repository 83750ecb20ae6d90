// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>

namespace ctlio {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Element of SO(3), stored as a unit quaternion. The interface is
/// representation-agnostic: construct from / convert to rotation matrices or
/// quaternions freely. Every constructor and composition renormalizes, so the
/// unit-norm invariant holds to ~1e-16 regardless of how many operations chain.
class Rotation {
public:
  Rotation() : q_(1.0, 0.0, 0.0, 0.0) {}

  explicit Rotation(const Eigen::Quaterniond& q) : q_(q.normalized()) {}

  explicit Rotation(const Mat3& m) : q_(Eigen::Quaterniond(m).normalized()) {}

  static Rotation identity() { return Rotation(); }

  /// Adopts an already-unit quaternion verbatim (no renormalization), so that
  /// serialized rotations round-trip bit-exactly. Throws when the norm is off
  /// by more than 1e-9.
  static Rotation from_normalized(const Eigen::Quaterniond& q) {
    if (std::abs(q.squaredNorm() - 1.0) > 1e-9) {
      throw std::invalid_argument("from_normalized: quaternion is not unit length");
    }
    Rotation r;
    r.q_ = q;
    return r;
  }

  const Eigen::Quaterniond& quaternion() const { return q_; }

  Mat3 matrix() const { return q_.toRotationMatrix(); }

  Rotation inverse() const { return Rotation(q_.conjugate()); }

  Rotation operator*(const Rotation& rhs) const { return Rotation(q_ * rhs.q_); }

  Vec3 operator*(const Vec3& v) const { return q_ * v; }

  /// Angle of the relative rotation this->inverse() * rhs, in [0, pi].
  double angular_distance(const Rotation& rhs) const { return q_.angularDistance(rhs.q_); }

  bool is_approx(const Rotation& rhs, double tol = 1e-12) const {
    return angular_distance(rhs) < tol;
  }

private:
  Eigen::Quaterniond q_;
};

/// Rigid transform (R, t): x -> R x + t.
struct RigidTransform {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  RigidTransform() = default;
  RigidTransform(const Rotation& r, const Vec3& t) : rotation(r), translation(t) {}

  static RigidTransform identity() { return {}; }

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  RigidTransform operator*(const RigidTransform& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }

  RigidTransform inverse() const {
    const Rotation rinv = rotation.inverse();
    return {rinv, -(rinv * translation)};
  }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation.matrix();
    m.topRightCorner<3, 1>() = translation;
    return m;
  }
};

/// Exponential map R^3 -> SO(3) (Rodrigues). Switches to a Taylor expansion
/// below 1e-6 rad to avoid the 0/0 in the sinc terms.
Rotation exp_so3(const Vec3& v);

/// Logarithm map SO(3) -> R^3, principal branch (angle in [0, pi]).
/// At angle exactly pi the axis is extracted from the largest diagonal element
/// of the rotation matrix, with the dominant axis component made positive.
Vec3 log_so3(const Rotation& r);

/// Skew-symmetric matrix such that hat(a) * b == a x b.
Mat3 hat(const Vec3& v);

/// Inverse of hat. Requires the input to be skew-symmetric within 1e-9;
/// the skew part is extracted by symmetrization before reading components.
Vec3 vee(const Mat3& m);

}  // namespace ctlio
