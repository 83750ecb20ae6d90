// SPDX-License-Identifier: Apache-2.0

#include "ctlio/trajectory.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ctlio/errors.hpp"

namespace ctlio {

Trajectory::Trajectory(double t0, double dt, int order, const Rotation& r0, const Vec3& p0) {
  KnotGrid grid{t0, dt, order, 0};
  pos_ = SplineR3(grid, std::vector<Vec3>(order, p0));
  rot_ = SplineSO3(grid, std::vector<Rotation>(order, r0));
}

Trajectory::Trajectory(SplineR3 pos, SplineSO3 rot) : pos_(std::move(pos)), rot_(std::move(rot)) {
  if (pos_.grid().n_control != rot_.grid().n_control ||
      pos_.grid().t0 != rot_.grid().t0 || pos_.grid().dt != rot_.grid().dt ||
      pos_.grid().order != rot_.grid().order) {
    throw std::invalid_argument("trajectory splines must share one knot grid");
  }
}

RigidTransform Trajectory::pose(double t) const {
  return {rot_.rotation(t), pos_.position(t)};
}

RigidTransform Trajectory::lidar_pose(const Extrinsics& ext, double t) const {
  return pose(t) * ext.imu_to_lidar;
}

std::vector<int> Trajectory::extend_to(double t_end) {
  const KnotGrid& g = grid();
  if (g.evaluable(t_end)) return {};
  // Segment that must become evaluable; the nudge keeps a t_end on a knot
  // boundary from demanding an extra window.
  const double s = (t_end - g.t0) / g.dt - 1e-9;
  const int needed_segment = static_cast<int>(std::floor(s));
  const int needed_control = needed_segment + g.order;

  std::vector<int> added;
  while (pos_.grid().n_control < needed_control) {
    added.push_back(pos_.grid().n_control);
    pos_.append_control_point(pos_.control_points().back());
    rot_.append_control_point(rot_.control_points().back());
  }
  return added;
}

SegmentWindow Trajectory::window_for(double t_a, double t_b) const {
  if (t_b < t_a) throw std::invalid_argument("window_for: t_b < t_a");
  const KnotGrid& g = grid();
  const auto lo = normalize_time(g, t_a);
  // The window is half-open, so a t_b on a knot boundary does not pull in the
  // next segment.
  const auto hi = normalize_time(g, std::max(t_a, t_b - 1e-12 * std::max(1.0, std::abs(t_b))));

  SegmentWindow w;
  w.t_a = t_a;
  w.t_b = t_b;
  for (int i = lo.segment; i < hi.segment + g.order; ++i) w.active_ids.push_back(i);
  // Control points preceding the active set whose basis support [t_{j-k+1},
  // t_{j+1}) still reaches into the active support.
  const int first_static = std::max(0, lo.segment - (g.order - 1));
  for (int j = first_static; j < lo.segment; ++j) w.static_ids.push_back(j);
  w.static_start = std::max(g.min_time(), g.knot_time(first_static));
  return w;
}

void Trajectory::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trajectory file: " + path);
  const KnotGrid& g = grid();
  char line[512];
  std::snprintf(line, sizeof(line), "%.17g %.17g %d %d\n", g.t0, g.dt, g.order, g.n_control);
  out << line;
  for (int i = 0; i < g.n_control; ++i) {
    const Vec3& p = pos_.control_point(i);
    const Eigen::Quaterniond& q = rot_.control_point(i).quaternion();
    std::snprintf(line, sizeof(line), "%d %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", i,
                  p.x(), p.y(), p.z(), q.x(), q.y(), q.z(), q.w());
    out << line;
  }
  if (!out) throw IoError("failed writing trajectory file: " + path);
}

Trajectory Trajectory::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read trajectory file: " + path);
  KnotGrid g;
  int n = 0;
  if (!(in >> g.t0 >> g.dt >> g.order >> n)) {
    throw IoError("malformed trajectory header in " + path);
  }
  std::vector<Vec3> points;
  std::vector<Rotation> rotations;
  points.reserve(n);
  rotations.reserve(n);
  for (int i = 0; i < n; ++i) {
    int idx;
    double px, py, pz, qx, qy, qz, qw;
    if (!(in >> idx >> px >> py >> pz >> qx >> qy >> qz >> qw) || idx != i) {
      throw IoError("malformed control point row " + std::to_string(i) + " in " + path);
    }
    points.emplace_back(px, py, pz);
    rotations.push_back(Rotation::from_normalized(Eigen::Quaterniond(qw, qx, qy, qz)));
  }
  g.n_control = n;
  return Trajectory(SplineR3(g, std::move(points)), SplineSO3(g, std::move(rotations)));
}

void Trajectory::export_tum(const std::string& path, double rate_hz) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write TUM file: " + path);
  const double step = 1.0 / rate_hz;
  char line[512];
  const long n = static_cast<long>(std::floor((max_time() - min_time()) / step + 1e-9)) + 1;
  for (long i = 0; i < n; ++i) {
    const double t = std::min(min_time() + i * step, max_time());
    const RigidTransform T = pose(t);
    const Eigen::Quaterniond& q = T.rotation.quaternion();
    std::snprintf(line, sizeof(line), "%.9f %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", t,
                  T.translation.x(), T.translation.y(), T.translation.z(), q.x(), q.y(), q.z(),
                  q.w());
    out << line;
  }
}

}  // namespace ctlio
