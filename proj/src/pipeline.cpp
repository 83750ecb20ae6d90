// SPDX-License-Identifier: Apache-2.0

#include "ctlio/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include "ctlio/errors.hpp"
#include "ctlio/estimator.hpp"
#include "ctlio/io.hpp"
#include "ctlio/loopclosure.hpp"
#include "ctlio/sim.hpp"
#include "ctlio/trajectory.hpp"

namespace ctlio::pipeline {

namespace fs = std::filesystem;

void run_simulate(const std::string& config_path, const std::string& out_dir,
                  long seed_override) {
  sim::SimConfig cfg = sim::SimConfig::load(config_path);
  if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);
  sim::emit_dataset(cfg, out_dir);
}

namespace {

Extrinsics extrinsics_from_manifest(const KeyValueFile& manifest) {
  Extrinsics ext;
  ext.imu_to_lidar.translation = manifest.get_vec3("extrinsic_trans", Vec3::Zero());
  const Vec3 rpy = manifest.get_vec3("extrinsic_rpy", Vec3::Zero());
  ext.imu_to_lidar.rotation =
      Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) *
                                  Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
                                  Eigen::AngleAxisd(rpy.x(), Vec3::UnitX())));
  return ext;
}

}  // namespace

void run_odometry(const std::string& dataset_dir, const std::string& config_path,
                  const std::string& out_dir) {
  const std::string manifest_path = dataset_dir + "/manifest.txt";
  if (!file_exists(manifest_path)) {
    throw IoError("dataset manifest not found: " + manifest_path);
  }
  const KeyValueFile manifest = KeyValueFile::load(manifest_path);

  const EstimatorConfig config =
      config_path.empty() ? EstimatorConfig{} : EstimatorConfig::load(config_path);
  const Extrinsics extrinsics = extrinsics_from_manifest(manifest);

  auto imu = load_imu_csv(dataset_dir + "/imu.csv");
  const auto index = load_scan_index(dataset_dir + "/scans.csv");
  if (index.empty()) throw IoError("empty dataset: no scans listed in " + dataset_dir);

  Estimator estimator(config, extrinsics, std::move(imu));
  for (size_t i = 0; i < index.size(); ++i) {
    Scan scan;
    try {
      scan = load_scan_csv(dataset_dir + "/" + index[i].path, index[i].t_start, index[i].period);
    } catch (const std::exception& e) {
      throw IoError("scan " + std::to_string(i) + ": " + e.what());
    }
    estimator.process_scan(scan);
  }
  estimator.finalize();

  ensure_directory(out_dir);
  estimator.trajectory().save(out_dir + "/trajectory.txt");
  estimator.trajectory().export_tum(out_dir + "/poses.tum", config.export_rate);
  save_scan_reports(out_dir + "/report.csv", estimator.reports());
  save_keyscan_table(out_dir + "/keyscans.csv", estimator.keyscans());

  KeyValueFile bias;
  bias.set_vec3("accel_bias", estimator.bias().accel_bias);
  bias.set_vec3("gyro_bias", estimator.bias().gyro_bias);
  bias.save(out_dir + "/bias.txt");

  std::vector<Vec3> points;
  std::vector<double> intensity;
  estimator.map_points(&points, &intensity);
  save_ply(out_dir + "/map.ply", points, intensity);

  KeyValueFile run;
  run.set("dataset_dir", fs::absolute(dataset_dir).string());
  run.set_double("knot_dt", config.knot_dt);
  run.set_double("export_rate", config.export_rate);
  run.set("trajectory", "trajectory.txt");
  run.save(out_dir + "/run_manifest.txt");
}

void run_loop_correct(const std::string& odometry_dir, const std::string& constraints_path,
                      const std::string& out_dir) {
  const Trajectory traj = Trajectory::load(odometry_dir + "/trajectory.txt");
  const auto keyscans = load_keyscan_table(odometry_dir + "/keyscans.csv");
  if (keyscans.empty()) throw IoError("no key-scans in " + odometry_dir);
  const auto loops = load_loop_constraints(constraints_path);

  for (const auto& l : loops) {
    const auto known = [&](int id) {
      for (const auto& ks : keyscans) {
        if (ks.id == id) return true;
      }
      return false;
    };
    if (!known(l.id_a) || !known(l.id_b)) {
      throw std::invalid_argument("loop constraint references unknown key-scan id " +
                                  std::to_string(known(l.id_a) ? l.id_b : l.id_a));
    }
  }

  std::vector<std::pair<int, double>> nodes;
  for (const auto& ks : keyscans) nodes.emplace_back(ks.id, ks.t);

  // Stage one: discrete pose graph over the key-scan poses.
  const PoseGraph graph = make_odometry_graph(traj, nodes);
  const auto optimized = optimize_pose_graph(graph, loops);

  // Stage two: anchors sampled before any control point moves.
  const double anchor_rate = 2.0 / traj.grid().dt;
  const auto anchors = sample_velocity_anchors(traj, anchor_rate);

  std::vector<PoseNode> key_poses;
  for (const auto& n : graph.nodes) key_poses.push_back({n.id, n.t, optimized.at(n.id)});

  const Trajectory corrected = correct_trajectory(traj, key_poses, anchors);

  ensure_directory(out_dir);
  corrected.save(out_dir + "/corrected_trajectory.txt");

  const KeyValueFile run = KeyValueFile::load(odometry_dir + "/run_manifest.txt");
  const double export_rate = run.get_double("export_rate", 100.0);
  corrected.export_tum(out_dir + "/corrected_poses.tum", export_rate);

  std::vector<KeyScan> corrected_keyscans;
  for (const auto& ks : keyscans) {
    corrected_keyscans.push_back({ks.id, ks.t, corrected.pose(ks.t), {}});
  }
  save_keyscan_table(out_dir + "/keyscans_corrected.csv", corrected_keyscans);

  // Before/after APE against the dataset ground truth when it is available.
  KeyValueFile summary;
  summary.set_int("n_loops", static_cast<long>(loops.size()));
  const std::string gt_tum = run.get_string("dataset_dir", "") + "/gt_poses.tum";
  if (file_exists(gt_tum)) {
    const auto gt = load_tum(gt_tum);
    const auto before =
        evaluate_trajectories(load_tum(odometry_dir + "/poses.tum"), gt, AlignMode::none);
    const auto after =
        evaluate_trajectories(load_tum(out_dir + "/corrected_poses.tum"), gt, AlignMode::none);
    summary.set_double("ape_trans_before", before.trans_rmse);
    summary.set_double("ape_rot_before", before.rot_rmse);
    summary.set_double("ape_trans_after", after.trans_rmse);
    summary.set_double("ape_rot_after", after.rot_rmse);
  }
  summary.save(out_dir + "/ape_summary.txt");

  KeyValueFile corrected_run;
  corrected_run.set("dataset_dir", run.get_string("dataset_dir", ""));
  corrected_run.set_double("export_rate", export_rate);
  corrected_run.set("trajectory", "corrected_trajectory.txt");
  corrected_run.save(out_dir + "/run_manifest.txt");
  if (file_exists(odometry_dir + "/bias.txt")) {
    fs::copy_file(odometry_dir + "/bias.txt", out_dir + "/bias.txt",
                  fs::copy_options::overwrite_existing);
  }
}

EvaluationResult run_evaluate(const std::string& estimate_tum, const std::string& gt_tum,
                              AlignMode mode, const std::string& per_sample_csv) {
  const auto result = evaluate_trajectories(load_tum(estimate_tum), load_tum(gt_tum), mode);
  if (!per_sample_csv.empty()) save_evaluation_csv(per_sample_csv, result);
  return result;
}

void run_plot_data(const std::string& run_dir, const std::string& out_dir) {
  const KeyValueFile run = KeyValueFile::load(run_dir + "/run_manifest.txt");
  const std::string trajectory_file = run.get_string("trajectory", "trajectory.txt");
  const Trajectory traj = Trajectory::load(run_dir + "/" + trajectory_file);
  const auto imu = load_imu_csv(run.get_string("dataset_dir") + "/imu.csv");

  ImuBias bias;
  if (file_exists(run_dir + "/bias.txt")) {
    const KeyValueFile kv = KeyValueFile::load(run_dir + "/bias.txt");
    bias.accel_bias = kv.get_vec3("accel_bias", Vec3::Zero());
    bias.gyro_bias = kv.get_vec3("gyro_bias", Vec3::Zero());
  }
  const GravityVector gravity;

  ensure_directory(out_dir);
  std::ofstream accel(out_dir + "/plot_accel.csv");
  std::ofstream gyro(out_dir + "/plot_gyro.csv");
  if (!accel || !gyro) throw IoError("cannot write plot CSVs in " + out_dir);
  accel << "t,deriv_x,deriv_y,deriv_z,imu_x,imu_y,imu_z\n";
  gyro << "t,deriv_x,deriv_y,deriv_z,imu_x,imu_y,imu_z\n";

  char line[512];
  for (const auto& m : imu) {
    if (!traj.grid().evaluable(m.t)) continue;
    const Vec3 a_pred =
        traj.rotation(m.t).inverse() * (traj.acceleration(m.t) - gravity.g) + bias.accel_bias;
    const Vec3 w_pred = traj.angular_velocity(m.t) + bias.gyro_bias;
    std::snprintf(line, sizeof(line), "%.9f,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", m.t, a_pred.x(),
                  a_pred.y(), a_pred.z(), m.accel.x(), m.accel.y(), m.accel.z());
    accel << line;
    std::snprintf(line, sizeof(line), "%.9f,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", m.t, w_pred.x(),
                  w_pred.y(), w_pred.z(), m.gyro.x(), m.gyro.y(), m.gyro.z());
    gyro << line;
  }
}

}  // namespace ctlio::pipeline
