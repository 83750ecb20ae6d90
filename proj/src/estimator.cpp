// SPDX-License-Identifier: Apache-2.0

#include "ctlio/estimator.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "ctlio/errors.hpp"
#include "ctlio/io.hpp"
#include "ctlio/spline_blocks.hpp"

namespace ctlio {

EstimatorConfig EstimatorConfig::load(const std::string& path) {
  return from_kv(KeyValueFile::load(path));
}

EstimatorConfig EstimatorConfig::from_kv(const KeyValueFile& kv) {
  kv.require_known_keys({
      "knot_dt", "sigma_lidar", "sigma_accel", "sigma_gyro", "keyscan_trans_thresh",
      "keyscan_rot_thresh", "keyscan_time_thresh", "submap_size", "submap_radius",
      "association_rounds", "edge_threshold", "planar_threshold", "sectors",
      "max_edge_per_sector", "max_planar_per_sector", "knn", "max_nn_distance",
      "plane_fit_max_dist", "line_eigen_ratio", "huber_delta", "bias_prior_scale",
      "solver_max_iter", "rigid_baseline", "export_rate",
  });
  EstimatorConfig c;
  c.knot_dt = kv.get_double("knot_dt", c.knot_dt);
  c.sigma_lidar = kv.get_double("sigma_lidar", c.sigma_lidar);
  c.sigma_accel = kv.get_double("sigma_accel", c.sigma_accel);
  c.sigma_gyro = kv.get_double("sigma_gyro", c.sigma_gyro);
  c.keyscan_trans_thresh = kv.get_double("keyscan_trans_thresh", c.keyscan_trans_thresh);
  c.keyscan_rot_thresh = kv.get_double("keyscan_rot_thresh", c.keyscan_rot_thresh);
  c.keyscan_time_thresh = kv.get_double("keyscan_time_thresh", c.keyscan_time_thresh);
  c.submap_size = static_cast<int>(kv.get_int("submap_size", c.submap_size));
  c.submap_radius = kv.get_double("submap_radius", c.submap_radius);
  c.association_rounds = static_cast<int>(kv.get_int("association_rounds", c.association_rounds));
  c.features.edge_threshold = kv.get_double("edge_threshold", c.features.edge_threshold);
  c.features.planar_threshold = kv.get_double("planar_threshold", c.features.planar_threshold);
  c.features.sectors = static_cast<int>(kv.get_int("sectors", c.features.sectors));
  c.features.max_edge_per_sector =
      static_cast<int>(kv.get_int("max_edge_per_sector", c.features.max_edge_per_sector));
  c.features.max_planar_per_sector =
      static_cast<int>(kv.get_int("max_planar_per_sector", c.features.max_planar_per_sector));
  c.association.knn = static_cast<int>(kv.get_int("knn", c.association.knn));
  c.association.max_nn_distance = kv.get_double("max_nn_distance", c.association.max_nn_distance);
  c.association.plane_fit_max_dist =
      kv.get_double("plane_fit_max_dist", c.association.plane_fit_max_dist);
  c.association.line_eigen_ratio =
      kv.get_double("line_eigen_ratio", c.association.line_eigen_ratio);
  c.huber_delta = kv.get_double("huber_delta", c.huber_delta);
  c.bias_prior_scale = kv.get_double("bias_prior_scale", c.bias_prior_scale);
  c.solver_max_iter = static_cast<int>(kv.get_int("solver_max_iter", c.solver_max_iter));
  c.rigid_baseline = kv.get_int("rigid_baseline", 0) != 0;
  c.export_rate = kv.get_double("export_rate", c.export_rate);

  if (c.knot_dt <= 0 || c.sigma_lidar <= 0 || c.sigma_accel <= 0 || c.sigma_gyro <= 0) {
    throw ConfigError("knot_dt and sigmas must be positive");
  }
  return c;
}

namespace {

// Shared functor builders: each residual evaluates the cumulative form on its
// k-point window with a basis fixed at problem-build time.

ResidualFn rotation_anchor(const CumulativeBasis cb, int k, const Rotation target) {
  return [cb, k, target](const std::vector<const ParamBlock*>& view) {
    Rotation window[8];
    detail::read_rotations(view, 0, k, window);
    return Eigen::VectorXd(log_so3(target.inverse() * detail::eval_rotation(window, cb, k)));
  };
}

ResidualFn position_anchor(const CumulativeBasis cb, int k, const Vec3 target) {
  return [cb, k, target](const std::vector<const ParamBlock*>& view) {
    Vec3 window[8];
    detail::read_positions(view, 0, k, window);
    return Eigen::VectorXd(detail::eval_position(window, cb, k) - target);
  };
}

ResidualFn velocity_anchor_r3(const CumulativeBasis cb, int k, const Vec3 target) {
  return [cb, k, target](const std::vector<const ParamBlock*>& view) {
    Vec3 window[8];
    detail::read_positions(view, 0, k, window);
    return Eigen::VectorXd(detail::eval_derivative(window, cb.dlambda, k) - target);
  };
}

// blocks: k rotations, k positions, accel bias
ResidualFn accel_measurement(const CumulativeBasis cb, int k, const Vec3 a_m, const Vec3 g) {
  return [cb, k, a_m, g](const std::vector<const ParamBlock*>& view) {
    Rotation rot_window[8];
    Vec3 pos_window[8];
    detail::read_rotations(view, 0, k, rot_window);
    detail::read_positions(view, k, k, pos_window);
    const Rotation r = detail::eval_rotation(rot_window, cb, k);
    const Vec3 a = detail::eval_derivative(pos_window, cb.ddlambda, k);
    const Vec3 bias(view[2 * k]->vec());
    return Eigen::VectorXd(r.inverse() * (a - g) - a_m + bias);
  };
}

// blocks: k rotations, gyro bias
ResidualFn gyro_measurement(const CumulativeBasis cb, int k, const Vec3 w_m) {
  return [cb, k, w_m](const std::vector<const ParamBlock*>& view) {
    Rotation window[8];
    detail::read_rotations(view, 0, k, window);
    const Vec3 bias(view[k]->vec());
    return Eigen::VectorXd(detail::eval_angular_velocity(window, cb, k) - w_m + bias);
  };
}

// blocks: k rotations, k positions
ResidualFn lidar_projection(const CumulativeBasis cb, int k, const RigidTransform ext,
                            const Vec3 raw, const std::variant<PlaneTarget, LineTarget> target) {
  return [cb, k, ext, raw, target](const std::vector<const ParamBlock*>& view) {
    Rotation rot_window[8];
    Vec3 pos_window[8];
    detail::read_rotations(view, 0, k, rot_window);
    detail::read_positions(view, k, k, pos_window);
    const RigidTransform body{detail::eval_rotation(rot_window, cb, k),
                              detail::eval_position(pos_window, cb, k)};
    const Vec3 global = body * (ext * raw);
    return Eigen::VectorXd::Constant(1, residual_against_target(target, global));
  };
}

ResidualFn bias_prior(const Vec3 previous) {
  return [previous](const std::vector<const ParamBlock*>& view) {
    return Eigen::VectorXd(Vec3(view[0]->vec()) - previous);
  };
}

ResidualFn bias_box(double bound) {
  return [bound](const std::vector<const ParamBlock*>& view) {
    const double excess = std::max(0.0, view[0]->vec().norm() - bound);
    return Eigen::VectorXd::Constant(1, excess);
  };
}

}  // namespace

bool initialize_segment(Trajectory& traj, const std::vector<ImuMeasurement>& stream,
                        const ImuBias& bias, const GravityVector& gravity,
                        const std::vector<int>& new_ids, SolveReport* report) {
  if (new_ids.empty()) return true;
  const KnotGrid grid = traj.grid();
  const int k = grid.order;
  if (k > 8) throw std::invalid_argument("spline order above 8 is not supported");

  // The previously evaluable range ended at the knot the first new point
  // extends past.
  const double t_anchor = grid.knot_time(new_ids.front() - k + 1);
  const double t_end = traj.max_time();
  const auto slice = slice_stream(stream, t_anchor, t_end);
  if (slice.empty()) {
    if (report != nullptr) *report = SolveReport{};
    return false;
  }

  IntegratedState init;
  init.t = t_anchor;
  init.rotation = traj.rotation(t_anchor);
  init.position = traj.pose(t_anchor).translation;
  init.velocity = traj.velocity(t_anchor);
  const auto states = integrate(slice, init, bias, gravity);

  Problem problem;
  const int first_cp = std::max(0, new_ids.front() - (k - 1));
  std::map<int, int> rot_ids, pos_ids;
  for (int cp = first_cp; cp < grid.n_control; ++cp) {
    const bool fixed = cp < new_ids.front();
    rot_ids[cp] = problem.add_so3(traj.rotation_spline().control_point(cp), fixed);
    pos_ids[cp] = problem.add_euclidean(traj.position_spline().control_point(cp), fixed);
  }

  for (const auto& s : states) {
    if (s.t <= t_anchor + 1e-12) continue;
    const auto nt = normalize_time(grid, s.t);
    if (!rot_ids.count(nt.segment) || !rot_ids.count(nt.segment + k - 1)) continue;
    const CumulativeBasis cb = cumulative_basis(nt.u, k, grid.dt);
    std::vector<int> rot_params, pos_params;
    for (int j = 0; j < k; ++j) {
      rot_params.push_back(rot_ids.at(nt.segment + j));
      pos_params.push_back(pos_ids.at(nt.segment + j));
    }
    problem.add_residual(rot_params, 3, rotation_anchor(cb, k, s.rotation));
    problem.add_residual(pos_params, 3, position_anchor(cb, k, s.position));
    problem.add_residual(pos_params, 3, velocity_anchor_r3(cb, k, s.velocity));
  }

  const SolveReport local = problem.solve({.max_iter = 10});
  if (report != nullptr) *report = local;

  for (int cp : new_ids) {
    traj.rotation_spline().control_point(cp) = problem.rot(rot_ids.at(cp));
    traj.position_spline().control_point(cp) = Vec3(problem.vec(pos_ids.at(cp)));
  }
  return true;
}

Estimator::Estimator(EstimatorConfig config, Extrinsics extrinsics,
                     std::vector<ImuMeasurement> imu_stream)
    : config_(std::move(config)), extrinsics_(extrinsics), imu_(std::move(imu_stream)) {}

void Estimator::bootstrap(const Scan& scan) {
  // Gravity alignment from the stationary stretch preceding the first scan
  // (falling back to the first second of the scan itself).
  auto samples = slice_stream(imu_, scan.t_start - 1.0, scan.t_start);
  if (samples.size() < 10) samples = slice_stream(imu_, scan.t_start, scan.t_start + 1.0);
  const Rotation r0 = align_gravity(samples);
  trajectory_ = Trajectory(scan.t_start, config_.knot_dt, 4, r0, Vec3::Zero());
  bias_ = ImuBias{};
  started_ = true;
}

ScanReport Estimator::process_scan(const Scan& scan) {
  const auto t_begin = std::chrono::steady_clock::now();
  ScanReport report;
  report.scan_id = scan_count_;

  if (!started_) {
    bootstrap(scan);
  } else if (scan.t_start < trajectory_.min_time()) {
    throw std::invalid_argument("scan precedes the trajectory start");
  }

  const double t_end = scan.t_start + scan.period;
  const auto new_ids = trajectory_.extend_to(t_end);
  SolveReport init_report;
  report.init_without_imu =
      !initialize_segment(trajectory_, imu_, bias_, gravity_, new_ids, &init_report);
  if (!new_ids.empty() && !report.init_without_imu) solve_log_.push_back(init_report);

  std::vector<Feature> features = extract_features(scan, config_.features);
  if (config_.rigid_baseline) {
    for (auto& f : features) f.point.tau = 0.0;
  }

  if (scan_count_ > 0) {
    const SolveOutcome outcome = register_scan(scan, features);
    report.cost_init = outcome.cost_init;
    report.cost_final = outcome.cost_final;
    report.n_corr = outcome.n_corr;
    report.degenerate = outcome.degenerate;
  }

  const RigidTransform pose_k = trajectory_.pose(scan.t_start);
  report.keyscan = select_keyscan(pose_k, scan.t_start);
  if (report.keyscan) promote_keyscan(scan, features, report.scan_id);

  last_scan_ = scan;
  last_features_ = features;
  ++scan_count_;

  report.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                        t_begin)
                  .count();
  reports_.push_back(report);
  return report;
}

bool Estimator::select_keyscan(const RigidTransform& pose, double t) const {
  if (keyscans_.empty()) return true;
  const KeyScan& last = keyscans_.back();
  const double trans = (pose.translation - last.pose.translation).norm();
  const double rot = pose.rotation.angular_distance(last.pose.rotation);
  const double elapsed = t - last.t;
  return trans > config_.keyscan_trans_thresh || rot > config_.keyscan_rot_thresh ||
         elapsed > config_.keyscan_time_thresh;
}

void Estimator::promote_keyscan(const Scan& scan, const std::vector<Feature>& features,
                                int id) {
  KeyScan ks;
  ks.id = id;
  ks.t = scan.t_start;
  ks.pose = trajectory_.pose(scan.t_start);

  // Undistort feature points into the scan-start LiDAR frame with the
  // converged trajectory.
  const RigidTransform start_inv = trajectory_.lidar_pose(extrinsics_, scan.t_start).inverse();
  ks.features.reserve(features.size());
  for (const auto& f : features) {
    Feature undistorted = f;
    const RigidTransform pose = trajectory_.lidar_pose(extrinsics_, scan.t_start + f.point.tau);
    undistorted.point.xyz = start_inv * (pose * f.point.xyz);
    ks.features.push_back(undistorted);
  }
  keyscans_.push_back(std::move(ks));
  submap_ = build_submap();
}

void Estimator::finalize() {
  if (!started_ || reports_.empty() || reports_.back().keyscan) return;
  promote_keyscan(last_scan_, last_features_, reports_.back().scan_id);
  reports_.back().keyscan = true;
}

Submap assemble_submap(const std::vector<KeyScan>& keyscans, const Extrinsics& extrinsics,
                       const Vec3& current_position, int recent, double radius) {
  const int n = static_cast<int>(keyscans.size());
  std::vector<int> ids;
  std::vector<Vec3> edges, planars;
  for (int i = 0; i < n; ++i) {
    const KeyScan& ks = keyscans[i];
    const bool is_recent = i >= n - recent;
    const bool is_near = (ks.pose.translation - current_position).norm() <= radius;
    if (!is_recent && !is_near) continue;
    ids.push_back(ks.id);
    const RigidTransform lidar_pose = ks.pose * extrinsics.imu_to_lidar;
    for (const auto& f : ks.features) {
      const Vec3 global = lidar_pose * f.point.xyz;
      (f.kind == FeatureKind::edge ? edges : planars).push_back(global);
    }
  }
  return Submap(std::move(ids), std::move(edges), std::move(planars));
}

Submap Estimator::build_submap() const {
  const Vec3 current = keyscans_.empty() ? Vec3::Zero() : keyscans_.back().pose.translation;
  return assemble_submap(keyscans_, extrinsics_, current, config_.submap_size,
                         config_.submap_radius);
}

Estimator::SolveOutcome Estimator::register_scan(const Scan& scan,
                                                 const std::vector<Feature>& features) {
  SolveOutcome outcome;
  const double t_end = scan.t_start + scan.period;
  const SegmentWindow window = trajectory_.window_for(scan.t_start, t_end);
  const KnotGrid grid = trajectory_.grid();
  const int k = grid.order;
  const auto imu_slice = slice_stream(imu_, window.static_start, t_end);

  const int rounds = std::max(1, config_.association_rounds);
  for (int round = 0; round < rounds; ++round) {
    const auto corrs =
        associate(features, scan.t_start, submap_, trajectory_, extrinsics_, config_.association);
    outcome.n_corr = static_cast<int>(corrs.size());
    outcome.degenerate = corrs.empty();

    Problem problem;
    std::map<int, int> rot_ids, pos_ids;
    for (int cp : window.static_ids) {
      rot_ids[cp] = problem.add_so3(trajectory_.rotation_spline().control_point(cp), true);
      pos_ids[cp] = problem.add_euclidean(trajectory_.position_spline().control_point(cp), true);
    }
    for (int cp : window.active_ids) {
      rot_ids[cp] = problem.add_so3(trajectory_.rotation_spline().control_point(cp), false);
      pos_ids[cp] = problem.add_euclidean(trajectory_.position_spline().control_point(cp), false);
    }
    const int bias_accel = problem.add_euclidean(bias_.accel_bias);
    const int bias_gyro = problem.add_euclidean(bias_.gyro_bias);

    auto window_params = [&](int segment, bool rot, bool pos, int extra) {
      std::vector<int> params;
      if (rot) {
        for (int j = 0; j < k; ++j) params.push_back(rot_ids.at(segment + j));
      }
      if (pos) {
        for (int j = 0; j < k; ++j) params.push_back(pos_ids.at(segment + j));
      }
      if (extra >= 0) params.push_back(extra);
      return params;
    };

    const double w_lidar = 1.0 / config_.sigma_lidar;
    const Loss lidar_loss = Loss::huber(config_.huber_delta / config_.sigma_lidar);
    for (const auto& c : corrs) {
      const double t = scan.t_start + c.feature.point.tau;
      const auto nt = normalize_time(grid, t);
      if (!rot_ids.count(nt.segment) || !rot_ids.count(nt.segment + k - 1)) continue;
      const CumulativeBasis cb = cumulative_basis(nt.u, k, grid.dt);
      problem.add_residual(
          window_params(nt.segment, true, true, -1), 1,
          lidar_projection(cb, k, extrinsics_.imu_to_lidar, c.feature.point.xyz, c.target),
          w_lidar, lidar_loss);
    }

    const double w_accel = 1.0 / config_.sigma_accel;
    const double w_gyro = 1.0 / config_.sigma_gyro;
    for (const auto& m : imu_slice) {
      const auto nt = normalize_time(grid, m.t);
      // Boundary samples can land one segment outside the window sets by
      // float jitter; they carry no information the neighbors lack.
      if (!rot_ids.count(nt.segment) || !rot_ids.count(nt.segment + k - 1)) continue;
      const CumulativeBasis cb = cumulative_basis(nt.u, k, grid.dt);
      problem.add_residual(window_params(nt.segment, true, true, bias_accel), 3,
                           accel_measurement(cb, k, m.accel, gravity_.g), w_accel);
      problem.add_residual(window_params(nt.segment, true, false, bias_gyro), 3,
                           gyro_measurement(cb, k, m.gyro), w_gyro);
    }

    // Weak pull toward the previous window's bias plus the sanity box.
    problem.add_residual({bias_accel}, 3, bias_prior(bias_.accel_bias),
                         config_.bias_prior_scale * w_accel);
    problem.add_residual({bias_gyro}, 3, bias_prior(bias_.gyro_bias),
                         config_.bias_prior_scale * w_gyro);
    problem.add_residual({bias_accel}, 1, bias_box(1.0), 1e4);
    problem.add_residual({bias_gyro}, 1, bias_box(0.1), 1e4);

    const SolveReport rep = problem.solve({.max_iter = config_.solver_max_iter});
    solve_log_.push_back(rep);
    if (round == 0) outcome.cost_init = rep.initial_cost;
    outcome.cost_final = rep.final_cost;

    for (int cp : window.active_ids) {
      trajectory_.rotation_spline().control_point(cp) = problem.rot(rot_ids.at(cp));
      trajectory_.position_spline().control_point(cp) = Vec3(problem.vec(pos_ids.at(cp)));
    }
    bias_.accel_bias = Vec3(problem.vec(bias_accel));
    bias_.gyro_bias = Vec3(problem.vec(bias_gyro));

    if (outcome.degenerate) break;  // IMU-only solve; nothing to re-associate
  }
  return outcome;
}

void Estimator::map_points(std::vector<Vec3>* points, std::vector<double>* intensity) const {
  points->clear();
  intensity->clear();
  for (const auto& ks : keyscans_) {
    const RigidTransform lidar_pose = ks.pose * extrinsics_.imu_to_lidar;
    for (const auto& f : ks.features) {
      points->push_back(lidar_pose * f.point.xyz);
      intensity->push_back(f.curvature);
    }
  }
}

void save_scan_reports(const std::string& path, const std::vector<ScanReport>& reports) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report file: " + path);
  out << "scan_id,cost_init,cost_final,n_corr,keyscan,degenerate,ms\n";
  char line[256];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%d,%d,%d,%.3f\n", r.scan_id, r.cost_init,
                  r.cost_final, r.n_corr, r.keyscan ? 1 : 0, r.degenerate ? 1 : 0, r.ms);
    out << line;
  }
}

void save_keyscan_table(const std::string& path, const std::vector<KeyScan>& keyscans) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write keyscan file: " + path);
  out << "id,t,tx,ty,tz,qx,qy,qz,qw\n";
  char line[512];
  for (const auto& ks : keyscans) {
    const auto& q = ks.pose.rotation.quaternion();
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  ks.id, ks.t, ks.pose.translation.x(), ks.pose.translation.y(),
                  ks.pose.translation.z(), q.x(), q.y(), q.z(), q.w());
    out << line;
  }
}

std::vector<KeyScanRow> load_keyscan_table(const std::string& path) {
  const auto rows = read_csv(path, "id,t,tx,ty,tz,qx,qy,qz,qw");
  std::vector<KeyScanRow> out;
  for (const auto& r : rows) {
    KeyScanRow row;
    row.id = static_cast<int>(r[0]);
    row.t = r[1];
    row.pose.translation = Vec3(r[2], r[3], r[4]);
    row.pose.rotation = Rotation(Eigen::Quaterniond(r[8], r[5], r[6], r[7]));
    out.push_back(row);
  }
  return out;
}

}  // namespace ctlio
