#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ctlio/sim.hpp"
#include "scenario.hpp"

using namespace ctlio;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("sim");

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool directories_identical(const std::string& a, const std::string& b) {
  std::vector<std::string> rel_a, rel_b;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a).string());
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b).string());
  }
  std::sort(rel_a.begin(), rel_a.end());
  std::sort(rel_b.begin(), rel_b.end());
  if (rel_a != rel_b) return false;
  for (const auto& rel : rel_a) {
    if (slurp(a + "/" + rel) != slurp(b + "/" + rel)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("stationary noise-free imu is the pure gravity reaction") {
  const auto files = scenario::write("sim_still", {.motion = scenario::Motion::still});
  const auto cfg = scenario::load_config(files);
  const auto gt = sim::build_waypoint_trajectory(sim::load_waypoints(cfg.waypoints_path),
                                                 cfg.gt_knot_dt);
  const auto imu = sim::synthesize_imu(cfg, gt, gt.min_time(), gt.max_time());
  REQUIRE(!imu.empty());
  for (const auto& m : imu) {
    CHECK((m.accel - Vec3(0, 0, 9.81)).norm() < 1e-9);
    CHECK(m.gyro.norm() < 1e-9);
  }
}

TEST_CASE("zero-noise measurements make the residuals vanish on the true trajectory") {
  const auto files = scenario::write("sim_resid", {.motion = scenario::Motion::gentle,
                                                   .bias = true});
  const auto cfg = scenario::load_config(files);
  const auto gt = sim::build_waypoint_trajectory(sim::load_waypoints(cfg.waypoints_path),
                                                 cfg.gt_knot_dt);
  const auto imu = sim::synthesize_imu(cfg, gt, gt.min_time(), gt.max_time());
  const GravityVector g;
  for (const auto& m : imu) {
    CHECK(accel_residual(gt, m, cfg.true_bias, g).norm() < 1e-10);
    CHECK(gyro_residual(gt, m, cfg.true_bias).norm() < 1e-10);
  }
}

TEST_CASE("static scan points lie on their generating planes") {
  const auto files = scenario::write("sim_static_scan", {.motion = scenario::Motion::still});
  const auto cfg = scenario::load_config(files);
  const auto world = sim::load_world(cfg.world_path);
  const auto gt = sim::build_waypoint_trajectory(sim::load_waypoints(cfg.waypoints_path),
                                                 cfg.gt_knot_dt);
  const auto s = sim::synthesize_scan(cfg, world, gt, 1.0, 0);
  REQUIRE(s.scan.points.size() == s.plane_ids.size());
  REQUIRE(!s.scan.points.empty());

  // Stationary sensor: the sensor->global transform is constant.
  const RigidTransform pose = gt.lidar_pose(cfg.extrinsics, 1.0);
  for (size_t i = 0; i < s.scan.points.size(); ++i) {
    const auto& patch = world.patches[s.plane_ids[i]];
    const Vec3 global = pose * s.scan.points[i].xyz;
    CHECK(std::abs(patch.normal().dot(global) + patch.plane_offset()) < 1e-9);
  }

  // Undistortion is the identity without motion.
  const auto undistorted = undistort_scan(s.scan, gt, cfg.extrinsics);
  for (size_t i = 0; i < undistorted.size(); ++i) {
    CHECK((undistorted[i].xyz - s.scan.points[i].xyz).norm() < 1e-10);
  }
}

TEST_CASE("spinning scan is distorted; true-trajectory undistortion repairs it") {
  const auto files = scenario::write("sim_spin_scan", {.motion = scenario::Motion::spin});
  const auto cfg = scenario::load_config(files);
  const auto world = sim::load_world(cfg.world_path);
  const auto gt = sim::build_waypoint_trajectory(sim::load_waypoints(cfg.waypoints_path),
                                                 cfg.gt_knot_dt);

  const double t_start = 2.0;  // well inside the spin
  const auto s = sim::synthesize_scan(cfg, world, gt, t_start, 3);
  const RigidTransform start_pose = gt.lidar_pose(cfg.extrinsics, t_start);

  auto rms_against_planes = [&](const std::vector<RawPoint>& pts) {
    double sq = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
      const auto& patch = world.patches[s.plane_ids[i]];
      const Vec3 global = start_pose * pts[i].xyz;
      const double d = patch.normal().dot(global) + patch.plane_offset();
      sq += d * d;
    }
    return std::sqrt(sq / pts.size());
  };

  const double raw_rms = rms_against_planes(s.scan.points);
  const auto undistorted = undistort_scan(s.scan, gt, cfg.extrinsics);
  const double undistorted_rms = rms_against_planes(undistorted);

  CHECK(undistorted_rms < 1e-9);
  CHECK(raw_rms > 5.0 * std::max(undistorted_rms, 1e-6));
}

TEST_CASE("emit_dataset is deterministic and self-consistent") {
  scenario::Options opts;
  opts.motion = scenario::Motion::gentle;
  opts.noise = true;
  opts.bias = true;
  opts.rings = 4;
  opts.points_per_ring = 90;
  opts.end_time = 1.85;
  opts.seed = 42;
  opts.emit_loop = true;

  const auto files_a = scenario::write("sim_det_a", opts);
  const std::string out_a = scenario::unique_dir("sim_det_out_a");
  const std::string out_b = scenario::unique_dir("sim_det_out_b");

  const auto truth_a = sim::emit_dataset(scenario::load_config(files_a), out_a);
  const auto truth_b = sim::emit_dataset(scenario::load_config(files_a), out_b);
  CHECK(directories_identical(out_a, out_b));

  // Different seed changes the noisy outputs.
  KeyValueFile cfg = KeyValueFile::load(files_a.config);
  cfg.set_int("seed", 43);
  cfg.save(files_a.config);
  const std::string out_c = scenario::unique_dir("sim_det_out_c");
  sim::emit_dataset(scenario::load_config(files_a), out_c);
  CHECK(!directories_identical(out_a, out_c));

  SUBCASE("manifest echoes every config field") {
    const KeyValueFile manifest = KeyValueFile::load(out_a + "/manifest.txt");
    const KeyValueFile config = KeyValueFile::load(files_a.config);
    for (const auto& key : config.keys()) {
      CHECK(manifest.has(key));
    }
    CHECK(manifest.get_int("n_scans") == 8);  // floor((1.85-1.0)*10)
  }

  SUBCASE("ground-truth trajectory file round-trips exactly") {
    const std::string first = slurp(out_a + "/gt_trajectory.txt");
    const Trajectory reloaded = Trajectory::load(out_a + "/gt_trajectory.txt");
    const std::string resaved = out_a + "/gt_trajectory_resaved.txt";
    reloaded.save(resaved);
    CHECK(slurp(resaved) == first);
  }

  SUBCASE("scan files parse back through the index") {
    const auto index = load_scan_index(out_a + "/scans.csv");
    REQUIRE(index.size() == 8);
    const Scan scan =
        load_scan_csv(out_a + "/" + index[0].path, index[0].t_start, index[0].period);
    CHECK(!scan.points.empty());
    for (const auto& p : scan.points) {
      CHECK(p.tau >= 0.0);
      CHECK(p.tau < index[0].period);
    }
  }

  SUBCASE("loop constraint ties the first and last scan") {
    REQUIRE(truth_a.loops.size() == 1);
    CHECK(truth_a.loops[0].id_a == 0);
    CHECK(truth_a.loops[0].id_b == 7);
    const auto loaded = load_loop_constraints(out_a + "/loop_constraints.csv");
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].weight == truth_a.loops[0].weight);
  }
  (void)truth_b;
}

TEST_CASE("config errors") {
  const auto files = scenario::write("sim_cfg_err", {});
  KeyValueFile cfg = KeyValueFile::load(files.config);

  SUBCASE("unknown key is named") {
    cfg.set("definitely_not_a_key", "1");
    cfg.save(files.config);
    CHECK_THROWS_WITH_AS(sim::SimConfig::load(files.config),
                         doctest::Contains("definitely_not_a_key"), ConfigError);
  }

  SUBCASE("missing world file") {
    cfg.set("world", "no_such_world.txt");
    cfg.save(files.config);
    CHECK_THROWS_WITH_AS(sim::SimConfig::load(files.config), doctest::Contains("world"),
                         ConfigError);
  }
}

TEST_SUITE_END();
