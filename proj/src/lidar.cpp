// SPDX-License-Identifier: Apache-2.0

#include "ctlio/lidar.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "ctlio/errors.hpp"
#include "ctlio/io.hpp"

namespace ctlio {

// ---------------------------------------------------------------------------
// KdTree

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) return;
  std::vector<int> ids(points_.size());
  std::iota(ids.begin(), ids.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(ids, 0, static_cast<int>(ids.size()), 0);
}

int KdTree::build(std::vector<int>& ids, int begin, int end, int depth) {
  if (begin >= end) return -1;
  const int axis = depth % 3;
  const int mid = (begin + end) / 2;
  std::nth_element(ids.begin() + begin, ids.begin() + mid, ids.begin() + end,
                   [&](int a, int b) {
                     if (points_[a](axis) != points_[b](axis)) {
                       return points_[a](axis) < points_[b](axis);
                     }
                     return a < b;
                   });
  const int node_id = static_cast<int>(nodes_.size());
  nodes_.push_back({ids[mid], axis, -1, -1});
  const int left = build(ids, begin, mid, depth + 1);
  const int right = build(ids, mid + 1, end, depth + 1);
  nodes_[node_id].left = left;
  nodes_[node_id].right = right;
  return node_id;
}

void KdTree::search(int node, const Vec3& query, int k,
                    std::vector<std::pair<double, int>>& heap) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const double d2 = (points_[n.point] - query).squaredNorm();

  // Max-heap of (distance^2, index); ties prefer the lower index.
  const auto worse = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
    return a.first != b.first ? a.first < b.first : a.second > b.second;
  };
  const std::pair<double, int> candidate{d2, n.point};
  if (static_cast<int>(heap.size()) < k) {
    heap.push_back(candidate);
    std::push_heap(heap.begin(), heap.end(), worse);
  } else if (worse(candidate, heap.front())) {
    std::pop_heap(heap.begin(), heap.end(), worse);
    heap.back() = candidate;
    std::push_heap(heap.begin(), heap.end(), worse);
  }

  const double diff = query(n.axis) - points_[n.point](n.axis);
  const int near = diff <= 0.0 ? n.left : n.right;
  const int far = diff <= 0.0 ? n.right : n.left;
  search(near, query, k, heap);
  if (static_cast<int>(heap.size()) < k || diff * diff <= heap.front().first) {
    search(far, query, k, heap);
  }
}

std::vector<int> KdTree::knn(const Vec3& query, int k) const {
  std::vector<std::pair<double, int>> heap;
  heap.reserve(k + 1);
  search(root_, query, k, heap);
  std::sort(heap.begin(), heap.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second < b.second;
  });
  std::vector<int> out;
  out.reserve(heap.size());
  for (const auto& [d2, id] : heap) out.push_back(id);
  return out;
}

// ---------------------------------------------------------------------------
// Submap

Submap::Submap(std::vector<int> keyscan_ids, std::vector<Vec3> edge_points,
               std::vector<Vec3> planar_points)
    : keyscan_ids_(std::move(keyscan_ids)),
      edge_tree_(std::move(edge_points)),
      planar_tree_(std::move(planar_points)) {}

// ---------------------------------------------------------------------------
// Feature extraction

std::vector<Feature> extract_features(const Scan& scan, const FeatureParams& params,
                                      FeatureReport* report) {
  FeatureReport local;
  std::vector<Feature> features;

  // Group point indices by ring, preserving tau order.
  int max_ring = -1;
  for (const auto& p : scan.points) max_ring = std::max(max_ring, p.ring);
  std::vector<std::vector<int>> rings(max_ring + 1);
  for (int i = 0; i < static_cast<int>(scan.points.size()); ++i) {
    rings[scan.points[i].ring].push_back(i);
  }

  constexpr int kHalfWindow = 5;
  for (const auto& ring : rings) {
    if (ring.empty()) continue;
    const int n = static_cast<int>(ring.size());
    if (n < 2 * kHalfWindow + 1) {
      ++local.short_rings;
      continue;
    }

    // c = |sum of neighbor offsets| / (10 |x|)
    std::vector<double> curvature(n, -1.0);
    for (int i = kHalfWindow; i < n - kHalfWindow; ++i) {
      const Vec3& x = scan.points[ring[i]].xyz;
      Vec3 sum = Vec3::Zero();
      for (int d = -kHalfWindow; d <= kHalfWindow; ++d) {
        if (d == 0) continue;
        sum += scan.points[ring[i + d]].xyz - x;
      }
      const double range = x.norm();
      curvature[i] = range > 1e-9 ? sum.norm() / (2.0 * kHalfWindow * range) : 0.0;
    }

    // Per-sector selection with non-max suppression around picked edges.
    const int sectors = std::max(1, params.sectors);
    std::vector<char> suppressed(n, 0);
    for (int s = 0; s < sectors; ++s) {
      const int begin = kHalfWindow + (n - 2 * kHalfWindow) * s / sectors;
      const int end = kHalfWindow + (n - 2 * kHalfWindow) * (s + 1) / sectors;
      std::vector<int> order;
      for (int i = begin; i < end; ++i) order.push_back(i);

      // Edges: highest curvature first.
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return curvature[a] != curvature[b] ? curvature[a] > curvature[b] : a < b;
      });
      int n_edge = 0;
      for (int i : order) {
        if (n_edge >= params.max_edge_per_sector) break;
        if (suppressed[i] || curvature[i] <= params.edge_threshold) continue;
        features.push_back(
            {FeatureKind::edge, scan.points[ring[i]], curvature[i], ring[i]});
        ++n_edge;
        ++local.n_edge;
        for (int d = -kHalfWindow; d <= kHalfWindow; ++d) {
          const int j = i + d;
          if (j >= 0 && j < n) suppressed[j] = 1;
        }
      }

      // Planars: lowest curvature first.
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return curvature[a] != curvature[b] ? curvature[a] < curvature[b] : a < b;
      });
      int n_planar = 0;
      for (int i : order) {
        if (n_planar >= params.max_planar_per_sector) break;
        if (suppressed[i] || curvature[i] < 0.0 || curvature[i] >= params.planar_threshold) {
          continue;
        }
        features.push_back(
            {FeatureKind::planar, scan.points[ring[i]], curvature[i], ring[i]});
        ++n_planar;
        ++local.n_planar;
      }
    }
  }

  if (report != nullptr) *report = local;
  return features;
}

// ---------------------------------------------------------------------------
// Undistortion, association, residuals

std::vector<RawPoint> undistort_scan(const Scan& scan, const Trajectory& traj,
                                     const Extrinsics& ext) {
  const RigidTransform start_inv = traj.lidar_pose(ext, scan.t_start).inverse();
  std::vector<RawPoint> out;
  out.reserve(scan.points.size());
  for (const auto& p : scan.points) {
    const RigidTransform pose = traj.lidar_pose(ext, scan.t_start + p.tau);
    out.push_back({p.tau, start_inv * (pose * p.xyz), p.ring});
  }
  return out;
}

namespace {

struct PlaneFit {
  PlaneTarget plane;
  bool ok = false;
};

PlaneFit fit_plane(const KdTree& tree, const std::vector<int>& ids, double max_dist) {
  PlaneFit fit;
  Vec3 centroid = Vec3::Zero();
  for (int id : ids) centroid += tree.point(id);
  centroid /= static_cast<double>(ids.size());
  Mat3 cov = Mat3::Zero();
  for (int id : ids) {
    const Vec3 d = tree.point(id) - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  Vec3 normal = eig.eigenvectors().col(0);  // smallest eigenvalue
  // Deterministic sign: dominant component positive.
  int k = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(normal(i)) > std::abs(normal(k))) k = i;
  }
  if (normal(k) < 0.0) normal = -normal;
  normal.normalize();

  const double d = -normal.dot(centroid);
  for (int id : ids) {
    if (std::abs(normal.dot(tree.point(id)) + d) > max_dist) return fit;
  }
  fit.plane = {normal, d};
  fit.ok = true;
  return fit;
}

struct LineFit {
  LineTarget line;
  bool ok = false;
};

LineFit fit_line(const KdTree& tree, const std::vector<int>& ids, double eigen_ratio) {
  LineFit fit;
  Vec3 centroid = Vec3::Zero();
  for (int id : ids) centroid += tree.point(id);
  centroid /= static_cast<double>(ids.size());
  Mat3 cov = Mat3::Zero();
  for (int id : ids) {
    const Vec3 d = tree.point(id) - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  if (eig.eigenvalues()(2) < eigen_ratio * eig.eigenvalues()(1)) return fit;
  Vec3 dir = eig.eigenvectors().col(2);
  int k = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(dir(i)) > std::abs(dir(k))) k = i;
  }
  if (dir(k) < 0.0) dir = -dir;
  fit.line = {centroid, dir.normalized()};
  fit.ok = true;
  return fit;
}

}  // namespace

std::vector<Correspondence> associate(const std::vector<Feature>& features, double scan_start,
                                      const Submap& submap, const Trajectory& guess,
                                      const Extrinsics& ext, const AssociationParams& params) {
  std::vector<Correspondence> out;
  if (submap.empty()) return out;

  for (const auto& f : features) {
    const Vec3 global = guess.lidar_pose(ext, scan_start + f.point.tau) * f.point.xyz;
    const KdTree& tree = f.kind == FeatureKind::planar ? submap.planars() : submap.edges();
    if (tree.size() < params.knn) continue;
    const auto ids = tree.knn(global, params.knn);
    if (ids.empty()) continue;
    if ((tree.point(ids.front()) - global).norm() > params.max_nn_distance) continue;

    if (f.kind == FeatureKind::planar) {
      const auto fit = fit_plane(tree, ids, params.plane_fit_max_dist);
      if (fit.ok) out.push_back({f, fit.plane});
    } else {
      const auto fit = fit_line(tree, ids, params.line_eigen_ratio);
      if (fit.ok) out.push_back({f, fit.line});
    }
  }
  return out;
}

double residual_against_target(const std::variant<PlaneTarget, LineTarget>& target,
                               const Vec3& point_global) {
  if (std::holds_alternative<PlaneTarget>(target)) {
    const auto& plane = std::get<PlaneTarget>(target);
    return plane.normal.dot(point_global) + plane.d;
  }
  const auto& line = std::get<LineTarget>(target);
  return (point_global - line.point).cross(line.direction).norm();
}

double lidar_residual(const Correspondence& c, double scan_start, const Trajectory& traj,
                      const Extrinsics& ext) {
  const Vec3 global = traj.lidar_pose(ext, scan_start + c.feature.point.tau) * c.feature.point.xyz;
  return residual_against_target(c.target, global);
}

// ---------------------------------------------------------------------------
// File formats

Scan load_scan_csv(const std::string& path, double t_start, double period) {
  const auto rows = read_csv(path, "tau,x,y,z,ring");
  Scan scan;
  scan.t_start = t_start;
  scan.period = period;
  scan.points.reserve(rows.size());
  for (const auto& r : rows) {
    scan.points.push_back({r[0], Vec3(r[1], r[2], r[3]), static_cast<int>(r[4])});
  }
  return scan;
}

void save_scan_csv(const std::string& path, const Scan& scan) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scan file: " + path);
  out << "tau,x,y,z,ring\n";
  char line[256];
  for (const auto& p : scan.points) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%d\n", p.tau, p.xyz.x(),
                  p.xyz.y(), p.xyz.z(), p.ring);
    out << line;
  }
}

std::vector<ScanIndexEntry> load_scan_index(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read scan index: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "t_start,period,path") {
    throw IoError(path + ": expected header `t_start,period,path`");
  }
  std::vector<ScanIndexEntry> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 3) throw IoError(path + ": malformed scan index row: " + line);
    entries.push_back({std::stod(cells[0]), std::stod(cells[1]), cells[2]});
  }
  return entries;
}

void save_scan_index(const std::string& path, const std::vector<ScanIndexEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scan index: " + path);
  out << "t_start,period,path\n";
  char line[512];
  for (const auto& e : entries) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%s\n", e.t_start, e.period, e.path.c_str());
    out << line;
  }
}

void save_ply(const std::string& path, const std::vector<Vec3>& points,
              const std::vector<double>& intensity) {
  if (points.size() != intensity.size()) {
    throw std::invalid_argument("save_ply: points/intensity size mismatch");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write PLY file: " + path);
  out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nproperty float intensity\n"
         "end_header\n";
  char line[256];
  for (size_t i = 0; i < points.size(); ++i) {
    std::snprintf(line, sizeof(line), "%.6f %.6f %.6f %.6f\n", points[i].x(), points[i].y(),
                  points[i].z(), intensity[i]);
    out << line;
  }
}

}  // namespace ctlio
