// Canned simulator scenarios shared by the sim/estimator/acceptance suites:
// a box room with a pillar, a stationary lead-in for gravity alignment, and a
// handful of motion profiles. All files land in a caller-owned directory.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ctlio/io.hpp"
#include "ctlio/sim.hpp"

namespace scenario {

enum class Motion { still, gentle, spin, fast_spin };

struct Options {
  Motion motion = Motion::gentle;
  bool noise = false;
  bool bias = false;
  double end_time = 3.05;  // waypoint span; scans run in [1.0, end_time]
  uint64_t seed = 1;
  int rings = 16;
  int points_per_ring = 360;
  bool emit_loop = false;
};

struct Files {
  std::string dir;
  std::string config;
};

inline std::string unique_dir(const std::string& tag) {
  static int counter = 0;
  const auto path =
      std::filesystem::temp_directory_path() / ("ctlio_" + tag + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path);
  std::filesystem::create_directories(path);
  return path.string();
}

inline ctlio::sim::WorldModel make_world() {
  ctlio::sim::WorldModel world = ctlio::sim::make_box_room(
      ctlio::Vec3(-5.0, -4.0, -1.5), ctlio::Vec3(5.0, 4.0, 1.5));
  // A pillar adds close-range structure away from the walls.
  const ctlio::Vec3 base(2.5, -1.5, -1.5);
  const double w = 0.6, h = 3.0;
  using ctlio::Vec3;
  world.patches.push_back({base, Vec3(w, 0, 0), Vec3(0, 0, h)});
  world.patches.push_back({base + Vec3(0, w, 0), Vec3(w, 0, 0), Vec3(0, 0, h)});
  world.patches.push_back({base, Vec3(0, w, 0), Vec3(0, 0, h)});
  world.patches.push_back({base + Vec3(w, 0, 0), Vec3(0, w, 0), Vec3(0, 0, h)});
  return world;
}

inline std::vector<ctlio::sim::Waypoint> make_waypoints(Motion motion, double end_time) {
  using ctlio::Vec3;
  std::vector<ctlio::sim::Waypoint> wps;
  const Vec3 start(0.0, 0.0, 0.0);
  wps.push_back({0.0, start, Vec3::Zero()});
  wps.push_back({1.2, start, Vec3::Zero()});
  switch (motion) {
    case Motion::still:
      wps.push_back({end_time, start, Vec3::Zero()});
      break;
    case Motion::gentle: {
      const double mid = 1.2 + 0.45 * (end_time - 1.2);
      wps.push_back({mid, Vec3(0.8, 0.25, 0.0), Vec3(0.0, 0.0, 0.15)});
      wps.push_back({end_time, Vec3(1.5, 0.5, 0.1), Vec3(0.0, 0.0, 0.3)});
      break;
    }
    case Motion::spin:
      // ~1 rad/s yaw in place
      wps.push_back({end_time, start, Vec3(0.0, 0.0, 1.0 * (end_time - 1.2))});
      break;
    case Motion::fast_spin:
      wps.push_back({end_time, start, Vec3(0.0, 0.0, 2.0 * (end_time - 1.2))});
      break;
  }
  return wps;
}

inline Files write(const std::string& tag, const Options& options) {
  Files files;
  files.dir = unique_dir(tag);

  ctlio::sim::save_world(files.dir + "/world.txt", make_world());
  ctlio::sim::save_waypoints(files.dir + "/waypoints.csv",
                             make_waypoints(options.motion, options.end_time));

  ctlio::KeyValueFile cfg;
  cfg.set("world", "world.txt");
  cfg.set("waypoints", "waypoints.csv");
  cfg.set_double("gt_knot_dt", 0.05);
  cfg.set_double("imu_rate", 400.0);
  cfg.set_int("lidar_rings", options.rings);
  cfg.set_int("points_per_ring", options.points_per_ring);
  cfg.set_double("spin_rate", 10.0);
  cfg.set_double("vfov_deg", 30.0);
  cfg.set_double("max_range", 30.0);
  cfg.set_double("sigma_gyro", options.noise ? 0.005 : 0.0);
  cfg.set_double("sigma_accel", options.noise ? 0.05 : 0.0);
  cfg.set_double("sigma_range", options.noise ? 0.02 : 0.0);
  if (options.bias) {
    cfg.set("bias_gyro", "0.002 -0.001 0.0015");
    cfg.set("bias_accel", "0.02 -0.01 0.03");
  }
  cfg.set("extrinsic_trans", "0.08 -0.03 0.05");
  cfg.set("extrinsic_rpy", "0.02 -0.03 0.05");
  cfg.set_int("seed", static_cast<long>(options.seed));
  cfg.set_double("scan_start_offset", 1.0);
  cfg.set_int("emit_loop", options.emit_loop ? 1 : 0);
  files.config = files.dir + "/sim.cfg";
  cfg.save(files.config);
  return files;
}

inline ctlio::sim::SimConfig load_config(const Files& files) {
  return ctlio::sim::SimConfig::load(files.config);
}

}  // namespace scenario
