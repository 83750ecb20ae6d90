// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <variant>
#include <vector>

#include "ctlio/geometry.hpp"
#include "ctlio/trajectory.hpp"

namespace ctlio {

/// One LiDAR return in the instantaneous sensor frame, stamped relative to the
/// scan start (0 <= tau < period).
struct RawPoint {
  double tau = 0.0;
  Vec3 xyz = Vec3::Zero();
  int ring = 0;
};

/// A full sweep of the spinning sensor over [t_start, t_start + period];
/// points ordered by tau within each ring.
struct Scan {
  double t_start = 0.0;
  double period = 0.1;
  std::vector<RawPoint> points;
};

enum class FeatureKind { edge, planar };

/// A feature point selected by local curvature; `index` is the position of
/// `point` in the source scan, kept for provenance.
struct Feature {
  FeatureKind kind = FeatureKind::planar;
  RawPoint point;
  double curvature = 0.0;
  int index = -1;
};

/// Infinite plane n.x + d = 0 (unit n).
struct PlaneTarget {
  Vec3 normal = Vec3::UnitZ();
  double d = 0.0;
};

/// Line through q with unit direction u.
struct LineTarget {
  Vec3 point = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();
};

/// A feature paired with its geometric target in the submap (global) frame.
struct Correspondence {
  Feature feature;
  std::variant<PlaneTarget, LineTarget> target;
};

struct FeatureParams {
  double edge_threshold = 1.0;
  double planar_threshold = 0.1;
  int sectors = 6;
  int max_edge_per_sector = 2;
  int max_planar_per_sector = 4;
};

struct FeatureReport {
  int short_rings = 0;
  int n_edge = 0;
  int n_planar = 0;
};

struct AssociationParams {
  int knn = 5;
  double max_nn_distance = 1.0;       // gate on the nearest neighbor, m
  double plane_fit_max_dist = 0.2;    // coplanarity gate on fit points, m
  double line_eigen_ratio = 3.0;      // dominant / second eigenvalue
};

/// Static 3D k-d tree over a point set. Nearest-neighbor ties break toward the
/// lowest point index so queries are deterministic.
class KdTree {
public:
  KdTree() = default;
  explicit KdTree(std::vector<Vec3> points);

  /// Indices of the k nearest points, closest first.
  std::vector<int> knn(const Vec3& query, int k) const;
  int size() const { return static_cast<int>(points_.size()); }
  const Vec3& point(int i) const { return points_[i]; }

private:
  struct Node {
    int point = -1;
    int axis = 0;
    int left = -1;
    int right = -1;
  };
  int build(std::vector<int>& ids, int begin, int end, int depth);
  void search(int node, const Vec3& query, int k,
              std::vector<std::pair<double, int>>& heap) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

/// Registration target: undistorted key-scan features in the global frame,
/// indexed per feature kind. Immutable once built.
class Submap {
public:
  Submap() = default;
  Submap(std::vector<int> keyscan_ids, std::vector<Vec3> edge_points,
         std::vector<Vec3> planar_points);

  bool empty() const { return edge_tree_.size() == 0 && planar_tree_.size() == 0; }
  const std::vector<int>& keyscan_ids() const { return keyscan_ids_; }
  const KdTree& edges() const { return edge_tree_; }
  const KdTree& planars() const { return planar_tree_; }

private:
  std::vector<int> keyscan_ids_;
  KdTree edge_tree_;
  KdTree planar_tree_;
};

/// LOAM-style curvature feature extraction: per-point curvature over the +/-5
/// ring neighborhood, thresholded and capped per ring sector. Rings shorter
/// than 11 points are skipped (counted in the report).
std::vector<Feature> extract_features(const Scan& scan, const FeatureParams& params = {},
                                      FeatureReport* report = nullptr);

/// Expresses every point in the LiDAR frame at scan start using the
/// continuous-time pose at the point's own timestamp.
std::vector<RawPoint> undistort_scan(const Scan& scan, const Trajectory& traj,
                                     const Extrinsics& ext);

/// Pairs features with plane/line fits to their nearest submap neighbors,
/// using the guess trajectory to place each feature at its own timestamp.
std::vector<Correspondence> associate(const std::vector<Feature>& features, double scan_start,
                                      const Submap& submap, const Trajectory& guess,
                                      const Extrinsics& ext,
                                      const AssociationParams& params = {});

/// Point-to-plane (signed) or point-to-line (unsigned) distance of the feature
/// mapped by the continuous-time pose at its own timestamp.
double lidar_residual(const Correspondence& c, double scan_start, const Trajectory& traj,
                      const Extrinsics& ext);

/// Scalar residual given the already-computed global feature position.
double residual_against_target(const std::variant<PlaneTarget, LineTarget>& target,
                               const Vec3& point_global);

/// Scan files: CSV with header `tau,x,y,z,ring`.
Scan load_scan_csv(const std::string& path, double t_start, double period);
void save_scan_csv(const std::string& path, const Scan& scan);

/// Scan index: CSV with header `t_start,period,path` (paths relative to the
/// index file's directory).
struct ScanIndexEntry {
  double t_start = 0.0;
  double period = 0.0;
  std::string path;
};
std::vector<ScanIndexEntry> load_scan_index(const std::string& path);
void save_scan_index(const std::string& path, const std::vector<ScanIndexEntry>& entries);

/// ASCII PLY export of points with one intensity channel.
void save_ply(const std::string& path, const std::vector<Vec3>& points,
              const std::vector<double>& intensity);

}  // namespace ctlio
