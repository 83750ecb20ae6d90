// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <string>
#include <vector>

#include "ctlio/imu.hpp"
#include "ctlio/io.hpp"
#include "ctlio/lidar.hpp"
#include "ctlio/loopclosure.hpp"
#include "ctlio/trajectory.hpp"

namespace ctlio::sim {

/// Finite rectangular patch: corner + two edge vectors. The patch plane is
/// spanned by edge_u/edge_v; ids index the patch list.
struct Patch {
  Vec3 corner = Vec3::Zero();
  Vec3 edge_u = Vec3::UnitX();
  Vec3 edge_v = Vec3::UnitY();

  Vec3 normal() const { return edge_u.cross(edge_v).normalized(); }
  double plane_offset() const { return -normal().dot(corner); }
};

struct WorldModel {
  std::vector<Patch> patches;
};

/// Axis-aligned box room viewed from inside: 6 inward faces.
WorldModel make_box_room(const Vec3& min_corner, const Vec3& max_corner);

/// World file: lines `cx cy cz ux uy uz vx vy vz` with '#' comments.
WorldModel load_world(const std::string& path);
void save_world(const std::string& path, const WorldModel& world);

/// Pose waypoint; rotation as intrinsic ZYX euler angles (radians).
struct Waypoint {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 rpy = Vec3::Zero();
};

/// Waypoint file: CSV `t,x,y,z,roll,pitch,yaw`.
std::vector<Waypoint> load_waypoints(const std::string& path);
void save_waypoints(const std::string& path, const std::vector<Waypoint>& waypoints);

/// Ground-truth trajectory: control points sampled from piecewise-linear
/// waypoint interpolation on a uniform grid covering the waypoint span.
Trajectory build_waypoint_trajectory(const std::vector<Waypoint>& waypoints, double knot_dt,
                                     int order = 4);

struct LidarModel {
  int rings = 16;
  int points_per_ring = 360;
  double spin_rate = 10.0;   // Hz; scan period = 1 / spin_rate
  double vfov_deg = 30.0;    // total vertical field of view
  double max_range = 50.0;
  double min_range = 0.2;
};

struct NoiseModel {
  double sigma_gyro = 0.005;   // rad/s
  double sigma_accel = 0.05;   // m/s^2
  double sigma_range = 0.02;   // m
};

struct SimConfig {
  std::string world_path;
  std::string waypoints_path;
  double gt_knot_dt = 0.05;
  double imu_rate = 400.0;
  LidarModel lidar;
  NoiseModel noise;
  ImuBias true_bias;
  Extrinsics extrinsics;
  uint64_t seed = 1;
  double scan_start_offset = 1.0;  // stationary lead-in before the first scan
  bool emit_loop = false;
  double loop_weight = 100.0;
  double loop_noise_trans = 0.0;
  double loop_noise_rot = 0.0;

  /// Parses the flat key=value config; unknown keys raise ConfigError naming
  /// the key. Relative world/waypoint paths resolve against the config dir.
  static SimConfig load(const std::string& path);
  KeyValueFile echo() const;
};

struct SynthesizedScan {
  Scan scan;
  std::vector<int> plane_ids;  // per point, index into world.patches
};

/// Everything the acceptance suite compares against.
struct GroundTruth {
  Trajectory trajectory;
  ImuBias bias;
  std::vector<LoopConstraint> loops;
};

/// Inverse of the measurement model along the ground-truth trajectory, with
/// seeded i.i.d. Gaussian noise per axis.
std::vector<ImuMeasurement> synthesize_imu(const SimConfig& cfg, const Trajectory& gt,
                                           double t_begin, double t_end);

/// Raycast of one sweep: each azimuth column fires all rings simultaneously
/// from the true LiDAR pose at that column's own timestamp; misses and
/// out-of-range returns are dropped.
SynthesizedScan synthesize_scan(const SimConfig& cfg, const WorldModel& world,
                                const Trajectory& gt, double t_start, int scan_index);

/// Writes the full dataset (IMU CSV, scan CSVs + index, ground-truth
/// trajectory + TUM samples, per-point plane ids, loop constraints, world
/// copy, manifest) and returns the ground truth.
GroundTruth emit_dataset(const SimConfig& cfg, const std::string& out_dir);

}  // namespace ctlio::sim
