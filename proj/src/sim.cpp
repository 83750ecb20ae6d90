// SPDX-License-Identifier: Apache-2.0

#include "ctlio/sim.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ctlio/errors.hpp"

namespace ctlio::sim {

namespace fs = std::filesystem;

WorldModel make_box_room(const Vec3& lo, const Vec3& hi) {
  const Vec3 d = hi - lo;
  WorldModel w;
  // floor, ceiling, then the four walls
  w.patches.push_back({lo, Vec3(d.x(), 0, 0), Vec3(0, d.y(), 0)});
  w.patches.push_back({Vec3(lo.x(), lo.y(), hi.z()), Vec3(d.x(), 0, 0), Vec3(0, d.y(), 0)});
  w.patches.push_back({lo, Vec3(d.x(), 0, 0), Vec3(0, 0, d.z())});
  w.patches.push_back({Vec3(lo.x(), hi.y(), lo.z()), Vec3(d.x(), 0, 0), Vec3(0, 0, d.z())});
  w.patches.push_back({lo, Vec3(0, d.y(), 0), Vec3(0, 0, d.z())});
  w.patches.push_back({Vec3(hi.x(), lo.y(), lo.z()), Vec3(0, d.y(), 0), Vec3(0, 0, d.z())});
  return w;
}

WorldModel load_world(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read world file: " + path);
  WorldModel world;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ss(line);
    Patch p;
    if (!(ss >> p.corner.x())) continue;  // blank line
    if (!(ss >> p.corner.y() >> p.corner.z() >> p.edge_u.x() >> p.edge_u.y() >> p.edge_u.z() >>
          p.edge_v.x() >> p.edge_v.y() >> p.edge_v.z())) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected 9 numbers per patch");
    }
    if (p.edge_u.cross(p.edge_v).norm() < 1e-12) {
      throw IoError(path + ":" + std::to_string(line_no) + ": degenerate patch");
    }
    world.patches.push_back(p);
  }
  return world;
}

void save_world(const std::string& path, const WorldModel& world) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write world file: " + path);
  out << "# patch: corner_xyz edge_u_xyz edge_v_xyz\n";
  char line[512];
  for (const auto& p : world.patches) {
    std::snprintf(line, sizeof(line), "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                  p.corner.x(), p.corner.y(), p.corner.z(), p.edge_u.x(), p.edge_u.y(),
                  p.edge_u.z(), p.edge_v.x(), p.edge_v.y(), p.edge_v.z());
    out << line;
  }
}

std::vector<Waypoint> load_waypoints(const std::string& path) {
  const auto rows = read_csv(path, "t,x,y,z,roll,pitch,yaw");
  std::vector<Waypoint> wps;
  for (const auto& r : rows) {
    wps.push_back({r[0], Vec3(r[1], r[2], r[3]), Vec3(r[4], r[5], r[6])});
  }
  if (wps.size() < 2) throw IoError(path + ": need at least two waypoints");
  for (size_t i = 1; i < wps.size(); ++i) {
    if (wps[i].t <= wps[i - 1].t) throw IoError(path + ": waypoint times must increase");
  }
  return wps;
}

void save_waypoints(const std::string& path, const std::vector<Waypoint>& waypoints) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write waypoint file: " + path);
  out << "t,x,y,z,roll,pitch,yaw\n";
  char line[512];
  for (const auto& w : waypoints) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", w.t,
                  w.position.x(), w.position.y(), w.position.z(), w.rpy.x(), w.rpy.y(),
                  w.rpy.z());
    out << line;
  }
}

namespace {

Rotation rpy_to_rotation(const Vec3& rpy) {
  return Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) *
                                     Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
                                     Eigen::AngleAxisd(rpy.x(), Vec3::UnitX())));
}

Waypoint interpolate(const std::vector<Waypoint>& wps, double t) {
  if (t <= wps.front().t) return wps.front();
  if (t >= wps.back().t) return wps.back();
  size_t i = 1;
  while (wps[i].t < t) ++i;
  const auto& a = wps[i - 1];
  const auto& b = wps[i];
  const double alpha = (t - a.t) / (b.t - a.t);
  Waypoint w;
  w.t = t;
  w.position = (1.0 - alpha) * a.position + alpha * b.position;
  w.rpy = (1.0 - alpha) * a.rpy + alpha * b.rpy;
  return w;
}

uint64_t substream_seed(uint64_t seed, uint64_t stream) {
  // splitmix64 step keeps per-scan RNG streams decorrelated.
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Trajectory build_waypoint_trajectory(const std::vector<Waypoint>& waypoints, double knot_dt,
                                     int order) {
  if (waypoints.size() < 2) throw std::invalid_argument("need at least two waypoints");
  const double t0 = waypoints.front().t;
  const double t1 = waypoints.back().t;
  // Enough control points for the evaluable range to cover [t0, t1].
  const int n = static_cast<int>(std::ceil((t1 - t0) / knot_dt - 1e-9)) + order - 1;

  std::vector<Vec3> points;
  std::vector<Rotation> rots;
  for (int i = 0; i < n; ++i) {
    const Waypoint w = interpolate(waypoints, t0 + i * knot_dt);
    points.push_back(w.position);
    rots.push_back(rpy_to_rotation(w.rpy));
  }
  const KnotGrid grid{t0, knot_dt, order, n};
  return Trajectory(SplineR3(grid, std::move(points)), SplineSO3(grid, std::move(rots)));
}

SimConfig SimConfig::load(const std::string& path) {
  const KeyValueFile kv = KeyValueFile::load(path);
  kv.require_known_keys({
      "world", "waypoints", "gt_knot_dt", "imu_rate", "lidar_rings", "points_per_ring",
      "spin_rate", "vfov_deg", "max_range", "min_range", "sigma_gyro", "sigma_accel",
      "sigma_range", "bias_gyro", "bias_accel", "extrinsic_trans", "extrinsic_rpy", "seed",
      "scan_start_offset", "emit_loop", "loop_weight", "loop_noise_trans", "loop_noise_rot",
  });

  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    return fs::path(p).is_absolute() ? p : (base / p).string();
  };

  SimConfig cfg;
  cfg.world_path = resolve(kv.get_string("world"));
  cfg.waypoints_path = resolve(kv.get_string("waypoints"));
  cfg.gt_knot_dt = kv.get_double("gt_knot_dt", cfg.gt_knot_dt);
  cfg.imu_rate = kv.get_double("imu_rate", cfg.imu_rate);
  cfg.lidar.rings = static_cast<int>(kv.get_int("lidar_rings", cfg.lidar.rings));
  cfg.lidar.points_per_ring =
      static_cast<int>(kv.get_int("points_per_ring", cfg.lidar.points_per_ring));
  cfg.lidar.spin_rate = kv.get_double("spin_rate", cfg.lidar.spin_rate);
  cfg.lidar.vfov_deg = kv.get_double("vfov_deg", cfg.lidar.vfov_deg);
  cfg.lidar.max_range = kv.get_double("max_range", cfg.lidar.max_range);
  cfg.lidar.min_range = kv.get_double("min_range", cfg.lidar.min_range);
  cfg.noise.sigma_gyro = kv.get_double("sigma_gyro", cfg.noise.sigma_gyro);
  cfg.noise.sigma_accel = kv.get_double("sigma_accel", cfg.noise.sigma_accel);
  cfg.noise.sigma_range = kv.get_double("sigma_range", cfg.noise.sigma_range);
  cfg.true_bias.gyro_bias = kv.get_vec3("bias_gyro", Vec3::Zero());
  cfg.true_bias.accel_bias = kv.get_vec3("bias_accel", Vec3::Zero());
  cfg.extrinsics.imu_to_lidar.translation = kv.get_vec3("extrinsic_trans", Vec3::Zero());
  cfg.extrinsics.imu_to_lidar.rotation = rpy_to_rotation(kv.get_vec3("extrinsic_rpy", Vec3::Zero()));
  cfg.seed = static_cast<uint64_t>(kv.get_int("seed", 1));
  cfg.scan_start_offset = kv.get_double("scan_start_offset", cfg.scan_start_offset);
  cfg.emit_loop = kv.get_int("emit_loop", 0) != 0;
  cfg.loop_weight = kv.get_double("loop_weight", cfg.loop_weight);
  cfg.loop_noise_trans = kv.get_double("loop_noise_trans", 0.0);
  cfg.loop_noise_rot = kv.get_double("loop_noise_rot", 0.0);

  if (cfg.imu_rate <= 0 || cfg.lidar.spin_rate <= 0) {
    throw ConfigError("imu_rate and spin_rate must be positive");
  }
  if (!file_exists(cfg.world_path)) throw ConfigError("missing world file: " + cfg.world_path);
  if (!file_exists(cfg.waypoints_path)) {
    throw ConfigError("missing waypoint file: " + cfg.waypoints_path);
  }
  return cfg;
}

KeyValueFile SimConfig::echo() const {
  KeyValueFile kv;
  kv.set("world", world_path);
  kv.set("waypoints", waypoints_path);
  kv.set_double("gt_knot_dt", gt_knot_dt);
  kv.set_double("imu_rate", imu_rate);
  kv.set_int("lidar_rings", lidar.rings);
  kv.set_int("points_per_ring", lidar.points_per_ring);
  kv.set_double("spin_rate", lidar.spin_rate);
  kv.set_double("vfov_deg", lidar.vfov_deg);
  kv.set_double("max_range", lidar.max_range);
  kv.set_double("min_range", lidar.min_range);
  kv.set_double("sigma_gyro", noise.sigma_gyro);
  kv.set_double("sigma_accel", noise.sigma_accel);
  kv.set_double("sigma_range", noise.sigma_range);
  kv.set_vec3("bias_gyro", true_bias.gyro_bias);
  kv.set_vec3("bias_accel", true_bias.accel_bias);
  kv.set_vec3("extrinsic_trans", extrinsics.imu_to_lidar.translation);
  const Vec3 rpy = extrinsics.imu_to_lidar.rotation.matrix().eulerAngles(2, 1, 0).reverse();
  kv.set_vec3("extrinsic_rpy", rpy);
  kv.set_int("seed", static_cast<long>(seed));
  kv.set_double("scan_start_offset", scan_start_offset);
  kv.set_int("emit_loop", emit_loop ? 1 : 0);
  kv.set_double("loop_weight", loop_weight);
  kv.set_double("loop_noise_trans", loop_noise_trans);
  kv.set_double("loop_noise_rot", loop_noise_rot);
  return kv;
}

std::vector<ImuMeasurement> synthesize_imu(const SimConfig& cfg, const Trajectory& gt,
                                           double t_begin, double t_end) {
  const GravityVector gravity;
  std::mt19937_64 rng(substream_seed(cfg.seed, 0));
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto noise3 = [&](double sigma) -> Vec3 {
    // Draw in a fixed order even when sigma is zero, keeping sample streams
    // aligned between noisy and noise-free configs.
    const Vec3 n(gauss(rng), gauss(rng), gauss(rng));
    return sigma * n;
  };

  std::vector<ImuMeasurement> stream;
  const double dt = 1.0 / cfg.imu_rate;
  const long count = static_cast<long>(std::floor((t_end - t_begin) / dt + 1e-9)) + 1;
  for (long i = 0; i < count; ++i) {
    const double t = std::min(t_begin + i * dt, t_end);
    ImuMeasurement m;
    m.t = t;
    m.gyro = gt.angular_velocity(t) + cfg.true_bias.gyro_bias + noise3(cfg.noise.sigma_gyro);
    m.accel = gt.rotation(t).inverse() * (gt.acceleration(t) - gravity.g) +
              cfg.true_bias.accel_bias + noise3(cfg.noise.sigma_accel);
    stream.push_back(m);
  }
  return stream;
}

SynthesizedScan synthesize_scan(const SimConfig& cfg, const WorldModel& world,
                                const Trajectory& gt, double t_start, int scan_index) {
  SynthesizedScan out;
  out.scan.t_start = t_start;
  out.scan.period = 1.0 / cfg.lidar.spin_rate;

  std::mt19937_64 rng(substream_seed(cfg.seed, 1000 + scan_index));
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double vfov = cfg.lidar.vfov_deg * M_PI / 180.0;
  for (int col = 0; col < cfg.lidar.points_per_ring; ++col) {
    const double tau = out.scan.period * col / cfg.lidar.points_per_ring;
    const double azimuth = 2.0 * M_PI * col / cfg.lidar.points_per_ring;
    const RigidTransform pose = gt.lidar_pose(cfg.extrinsics, t_start + tau);

    for (int ring = 0; ring < cfg.lidar.rings; ++ring) {
      const double elevation =
          cfg.lidar.rings == 1 ? 0.0 : -0.5 * vfov + vfov * ring / (cfg.lidar.rings - 1);
      const Vec3 dir_sensor(std::cos(elevation) * std::cos(azimuth),
                            std::cos(elevation) * std::sin(azimuth), std::sin(elevation));
      const Vec3 origin = pose.translation;
      const Vec3 dir = pose.rotation * dir_sensor;

      double best_range = cfg.lidar.max_range;
      int best_patch = -1;
      for (int pi = 0; pi < static_cast<int>(world.patches.size()); ++pi) {
        const Patch& p = world.patches[pi];
        Mat3 a;
        a.col(0) = dir;
        a.col(1) = -p.edge_u;
        a.col(2) = -p.edge_v;
        const double det = a.determinant();
        if (std::abs(det) < 1e-12) continue;  // ray parallel to the patch
        const Vec3 sol = a.inverse() * (p.corner - origin);
        const double range = sol(0);
        if (range < cfg.lidar.min_range || range >= best_range) continue;
        if (sol(1) < 0.0 || sol(1) > 1.0 || sol(2) < 0.0 || sol(2) > 1.0) continue;
        best_range = range;
        best_patch = pi;
      }

      const double noise = cfg.noise.sigma_range * gauss(rng);
      if (best_patch >= 0) {
        out.scan.points.push_back({tau, (best_range + noise) * dir_sensor, ring});
        out.plane_ids.push_back(best_patch);
      }
    }
  }
  return out;
}

GroundTruth emit_dataset(const SimConfig& cfg, const std::string& out_dir) {
  const WorldModel world = load_world(cfg.world_path);
  const auto waypoints = load_waypoints(cfg.waypoints_path);
  Trajectory gt = build_waypoint_trajectory(waypoints, cfg.gt_knot_dt);

  ensure_directory(out_dir);
  ensure_directory(out_dir + "/scans");
  ensure_directory(out_dir + "/gt");

  const double t0 = gt.min_time();
  const double t1 = gt.max_time();
  const double period = 1.0 / cfg.lidar.spin_rate;
  const double scan0 = t0 + cfg.scan_start_offset;
  const int n_scans = static_cast<int>(std::floor((t1 - scan0) / period + 1e-9));
  if (n_scans < 1) throw ConfigError("waypoint span leaves no room for a full scan");

  // IMU over the whole run (the lead-in before the first scan provides the
  // stationary stretch used for gravity alignment).
  const auto imu = synthesize_imu(cfg, gt, t0, t1);
  save_imu_csv(out_dir + "/imu.csv", imu);

  std::vector<ScanIndexEntry> index;
  std::vector<double> scan_starts;
  char name[64];
  for (int i = 0; i < n_scans; ++i) {
    const double t_start = scan0 + i * period;
    const auto s = synthesize_scan(cfg, world, gt, t_start, i);
    std::snprintf(name, sizeof(name), "scans/scan_%05d.csv", i);
    save_scan_csv(out_dir + "/" + name, s.scan);
    index.push_back({t_start, period, name});
    scan_starts.push_back(t_start);

    std::snprintf(name, sizeof(name), "gt/plane_ids_%05d.csv", i);
    std::ofstream pid(out_dir + "/" + name);
    pid << "plane_id\n";
    for (int id : s.plane_ids) pid << id << "\n";
  }
  save_scan_index(out_dir + "/scans.csv", index);

  gt.save(out_dir + "/gt_trajectory.txt");
  gt.export_tum(out_dir + "/gt_poses.tum", 100.0);
  save_world(out_dir + "/world.txt", world);

  GroundTruth truth{std::move(gt), cfg.true_bias, {}};

  if (cfg.emit_loop && n_scans >= 2) {
    std::mt19937_64 rng(substream_seed(cfg.seed, 2));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const RigidTransform pose_a = truth.trajectory.pose(scan_starts.front());
    const RigidTransform pose_b = truth.trajectory.pose(scan_starts.back());
    RigidTransform rel = pose_a.inverse() * pose_b;
    rel.translation += cfg.loop_noise_trans * Vec3(gauss(rng), gauss(rng), gauss(rng));
    rel.rotation =
        rel.rotation * exp_so3(cfg.loop_noise_rot * Vec3(gauss(rng), gauss(rng), gauss(rng)));
    truth.loops.push_back({0, n_scans - 1, rel, cfg.loop_weight});
  }
  save_loop_constraints(out_dir + "/loop_constraints.csv", truth.loops);

  KeyValueFile manifest = cfg.echo();
  manifest.set_int("n_scans", n_scans);
  manifest.set_int("n_imu", static_cast<long>(imu.size()));
  manifest.set_double("t_begin", t0);
  manifest.set_double("t_end", t1);
  manifest.set_double("first_scan_start", scan0);
  manifest.save(out_dir + "/manifest.txt");

  return truth;
}

}  // namespace ctlio::sim
