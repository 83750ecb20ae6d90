// SPDX-License-Identifier: Apache-2.0

#include "ctlio/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace ctlio {

namespace {
constexpr double kSmallAngle = 1e-6;
}

Rotation exp_so3(const Vec3& v) {
  const double theta = v.norm();
  // q = (cos(theta/2), sin(theta/2) * axis); sin(theta/2)/theta expanded for
  // small angles: 0.5 - theta^2/48 + O(theta^4).
  double w, s;
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    w = 1.0 - t2 / 8.0;
    s = 0.5 - t2 / 48.0;
  } else {
    w = std::cos(0.5 * theta);
    s = std::sin(0.5 * theta) / theta;
  }
  return Rotation(Eigen::Quaterniond(w, s * v.x(), s * v.y(), s * v.z()));
}

Vec3 log_so3(const Rotation& r) {
  Eigen::Quaterniond q = r.quaternion();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();  // principal branch

  const Vec3 im(q.x(), q.y(), q.z());
  const double im_norm = im.norm();
  const double theta = 2.0 * std::atan2(im_norm, q.w());

  if (theta > M_PI - 1e-11) {
    // Angle numerically at pi, where +axis and -axis describe the same
    // rotation: extract the axis from the largest diagonal element of R and
    // fix the sign so the dominant component is positive.
    const Mat3 m = r.matrix();
    int k = 0;
    if (m(1, 1) > m(k, k)) k = 1;
    if (m(2, 2) > m(k, k)) k = 2;
    Vec3 axis;
    axis(k) = std::sqrt(std::max(0.0, (m(k, k) + 1.0) / 2.0));
    const double denom = 2.0 * axis(k);
    axis((k + 1) % 3) = (m(k, (k + 1) % 3) + m((k + 1) % 3, k)) / (2.0 * denom);
    axis((k + 2) % 3) = (m(k, (k + 2) % 3) + m((k + 2) % 3, k)) / (2.0 * denom);
    axis.normalize();
    return theta * axis;
  }
  if (im_norm < 0.5 * kSmallAngle) {
    // theta/sin(theta/2) ~ 2 + theta^2/12
    return (2.0 + theta * theta / 12.0) * im;
  }
  return (theta / im_norm) * im;
}

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) {
  const Mat3 asym = m + m.transpose();
  if (asym.cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument("vee: input is not skew-symmetric within 1e-9");
  }
  const Mat3 s = 0.5 * (m - m.transpose());
  return Vec3(s(2, 1), s(0, 2), s(1, 0));
}

}  // namespace ctlio
