// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "ctlio/bspline.hpp"
#include "ctlio/geometry.hpp"

namespace ctlio {

/// Pre-calibrated rigid transform from the LiDAR frame to the IMU (body)
/// frame; constant over a run.
struct Extrinsics {
  RigidTransform imu_to_lidar;  // ^I_L T
};

/// Control points controlling a time window, split into the free (active) set
/// and the fixed (static) set whose basis support still overlaps the active
/// basis functions. Static points precede the active ones (causal odometry).
struct SegmentWindow {
  double t_a = 0.0;
  double t_b = 0.0;
  std::vector<int> active_ids;
  std::vector<int> static_ids;

  /// Start of the static time segments (for slicing inertial data); equals
  /// t_a when no static points exist.
  double static_start = 0.0;
};

/// Paired R^3 / SO(3) B-splines on one shared knot grid: the body (IMU)
/// trajectory ^G_I T(t) in the global frame.
class Trajectory {
public:
  Trajectory() = default;
  Trajectory(double t0, double dt, int order, const Rotation& r0, const Vec3& p0);
  Trajectory(SplineR3 pos, SplineSO3 rot);

  const KnotGrid& grid() const { return pos_.grid(); }
  const SplineR3& position_spline() const { return pos_; }
  const SplineSO3& rotation_spline() const { return rot_; }
  SplineR3& position_spline() { return pos_; }
  SplineSO3& rotation_spline() { return rot_; }

  double min_time() const { return grid().min_time(); }
  double max_time() const { return grid().max_time(); }

  RigidTransform pose(double t) const;
  RigidTransform lidar_pose(const Extrinsics& ext, double t) const;
  Vec3 velocity(double t) const { return pos_.velocity(t); }
  Vec3 acceleration(double t) const { return pos_.acceleration(t); }
  Rotation rotation(double t) const { return rot_.rotation(t); }
  Vec3 angular_velocity(double t) const { return rot_.angular_velocity(t); }

  /// Appends the minimum number of control points making [previous end, t_end]
  /// evaluable, seeding them by constant extrapolation of the last control
  /// point. Returns the new indices; empty when t_end is already covered.
  std::vector<int> extend_to(double t_end);

  /// Active/static control point sets for the window [t_a, t_b).
  SegmentWindow window_for(double t_a, double t_b) const;

  void save(const std::string& path) const;
  static Trajectory load(const std::string& path);

  /// Writes poses sampled at rate_hz over the evaluable range in TUM format
  /// (`t tx ty tz qx qy qz qw`).
  void export_tum(const std::string& path, double rate_hz) const;

private:
  SplineR3 pos_;
  SplineSO3 rot_;
};

}  // namespace ctlio
