// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "ctlio/imu.hpp"
#include "ctlio/lidar.hpp"
#include "ctlio/solver.hpp"
#include "ctlio/trajectory.hpp"

namespace ctlio {

struct EstimatorConfig {
  double knot_dt = 0.05;
  double sigma_lidar = 0.05;   // m
  double sigma_accel = 0.05;   // m/s^2
  double sigma_gyro = 0.005;   // rad/s
  double keyscan_trans_thresh = 0.2;              // m
  double keyscan_rot_thresh = 10.0 * M_PI / 180;  // rad
  double keyscan_time_thresh = 1.0;               // s
  int submap_size = 10;
  double submap_radius = 20.0;  // m
  int association_rounds = 3;
  FeatureParams features;
  AssociationParams association;
  double huber_delta = 0.1;       // m, on LiDAR residuals
  double bias_prior_scale = 10.0; // relative to the measurement weight
  int solver_max_iter = 10;
  bool rigid_baseline = false;    // force every feature tau to 0 (ablation)
  double export_rate = 100.0;     // Hz, TUM sampling

  /// Flat key=value config; unknown keys raise ConfigError naming the key.
  static EstimatorConfig load(const std::string& path);
  static EstimatorConfig from_kv(const class KeyValueFile& kv);
};

/// A scan promoted to the map: undistorted features in its own start frame
/// {L_k}, plus the body pose anchoring them globally. `id` is the source scan
/// index.
struct KeyScan {
  int id = 0;
  double t = 0.0;
  RigidTransform pose;  // ^G_I T(t_k)
  std::vector<Feature> features;
};

/// Per-scan processing summary (also the CSV report row).
struct ScanReport {
  int scan_id = 0;
  double cost_init = 0.0;
  double cost_final = 0.0;
  int n_corr = 0;
  bool keyscan = false;
  bool degenerate = false;
  double ms = 0.0;
  bool init_without_imu = false;
};

/// Submap assembly rule: the `recent` most recent key-scans plus any key-scan
/// within `radius` of the current position, features placed globally by their
/// key-scan poses.
Submap assemble_submap(const std::vector<KeyScan>& keyscans, const Extrinsics& extrinsics,
                       const Vec3& current_position, int recent, double radius);

/// Initializes freshly appended control points from strapdown-integrated
/// states: rotation/position/velocity anchors with unit weights, only the new
/// points free. Returns false (and leaves the constant-extrapolation seed)
/// when the stream slice is empty.
bool initialize_segment(Trajectory& traj, const std::vector<ImuMeasurement>& stream,
                        const ImuBias& bias, const GravityVector& gravity,
                        const std::vector<int>& new_ids, SolveReport* report = nullptr);

/// Sequential tightly-coupled odometry over one IMU stream and a scan series.
class Estimator {
public:
  Estimator(EstimatorConfig config, Extrinsics extrinsics,
            std::vector<ImuMeasurement> imu_stream);

  ScanReport process_scan(const Scan& scan);

  /// Promotes the last processed scan to a key-scan if it was not selected,
  /// so externally supplied loop constraints can anchor the run's end.
  void finalize();

  bool started() const { return started_; }
  const Trajectory& trajectory() const { return trajectory_; }
  const ImuBias& bias() const { return bias_; }
  const std::vector<KeyScan>& keyscans() const { return keyscans_; }
  const std::vector<ScanReport>& reports() const { return reports_; }
  const std::vector<SolveReport>& solve_log() const { return solve_log_; }
  const EstimatorConfig& config() const { return config_; }
  const Extrinsics& extrinsics() const { return extrinsics_; }

  /// Aggregated key-scan features in the global frame (map export); intensity
  /// is the feature curvature.
  void map_points(std::vector<Vec3>* points, std::vector<double>* intensity) const;

  bool select_keyscan(const RigidTransform& pose, double t) const;
  Submap build_submap() const;

private:
  struct SolveOutcome {
    double cost_init = 0.0;
    double cost_final = 0.0;
    int n_corr = 0;
    bool degenerate = false;
  };
  void bootstrap(const Scan& scan);
  SolveOutcome register_scan(const Scan& scan, const std::vector<Feature>& features);
  void promote_keyscan(const Scan& scan, const std::vector<Feature>& features, int id);

  EstimatorConfig config_;
  Extrinsics extrinsics_;
  std::vector<ImuMeasurement> imu_;
  GravityVector gravity_;

  bool started_ = false;
  Trajectory trajectory_;
  ImuBias bias_;
  std::vector<KeyScan> keyscans_;
  Submap submap_;
  std::vector<ScanReport> reports_;
  std::vector<SolveReport> solve_log_;
  int scan_count_ = 0;
  std::vector<Feature> last_features_;
  Scan last_scan_;
};

/// Per-scan report CSV: `scan_id,cost_init,cost_final,n_corr,keyscan,degenerate,ms`.
void save_scan_reports(const std::string& path, const std::vector<ScanReport>& reports);

/// Key-scan pose table: `id,t,tx,ty,tz,qx,qy,qz,qw`.
void save_keyscan_table(const std::string& path, const std::vector<KeyScan>& keyscans);
struct KeyScanRow {
  int id;
  double t;
  RigidTransform pose;
};
std::vector<KeyScanRow> load_keyscan_table(const std::string& path);

}  // namespace ctlio
