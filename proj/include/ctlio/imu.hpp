// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "ctlio/geometry.hpp"
#include "ctlio/trajectory.hpp"

namespace ctlio {

/// One raw inertial sample: body-frame angular rate and specific force.
struct ImuMeasurement {
  double t = 0.0;
  Vec3 gyro = Vec3::Zero();   // rad/s
  Vec3 accel = Vec3::Zero();  // m/s^2
};

/// Additive accelerometer/gyroscope biases, modeled constant per optimization
/// window. The magnitude bounds (1 m/s^2, 0.1 rad/s) are sanity limits the
/// estimator enforces as a box prior.
struct ImuBias {
  Vec3 accel_bias = Vec3::Zero();
  Vec3 gyro_bias = Vec3::Zero();
};

/// Global-frame gravity, fixed magnitude 9.81.
struct GravityVector {
  Vec3 g{0.0, 0.0, -9.81};
};

/// Pose and velocity produced by strapdown integration.
struct IntegratedState {
  double t = 0.0;
  Rotation rotation;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
};

/// Midpoint-rule strapdown integration of an inertial stream: one state per
/// measurement, starting from `init` (init.t must not exceed the first sample
/// time). Throws std::invalid_argument on non-monotone timestamps; an empty
/// stream yields an empty result.
std::vector<IntegratedState> integrate(const std::vector<ImuMeasurement>& stream,
                                       const IntegratedState& init, const ImuBias& bias,
                                       const GravityVector& gravity);

/// Accelerometer residual r_a = R(t_m)^T (a(t_m) - g) - a_m + b_a.
Vec3 accel_residual(const Trajectory& traj, const ImuMeasurement& m, const ImuBias& bias,
                    const GravityVector& gravity);

/// Gyroscope residual r_w = w(t_m) - w_m + b_w.
Vec3 gyro_residual(const Trajectory& traj, const ImuMeasurement& m, const ImuBias& bias);

/// Roll/pitch-only rotation aligning the mean accelerometer direction of a
/// stationary stretch with +z (the gravity reaction), i.e. the initial body
/// attitude up to yaw. Returns identity for an empty sample set.
Rotation align_gravity(const std::vector<ImuMeasurement>& samples);

/// IMU stream file: CSV with header `t,wx,wy,wz,ax,ay,az`.
std::vector<ImuMeasurement> load_imu_csv(const std::string& path);
void save_imu_csv(const std::string& path, const std::vector<ImuMeasurement>& stream);

/// Samples with t in [t_begin, t_end] (closed; inputs assumed sorted).
std::vector<ImuMeasurement> slice_stream(const std::vector<ImuMeasurement>& stream,
                                         double t_begin, double t_end);

}  // namespace ctlio
