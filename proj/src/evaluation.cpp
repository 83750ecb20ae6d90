// SPDX-License-Identifier: Apache-2.0

#include "ctlio/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ctlio/errors.hpp"

namespace ctlio {

std::vector<TumPose> load_tum(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read TUM file: " + path);
  std::vector<TumPose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected 8 fields");
    }
    poses.push_back({t, {Rotation(Eigen::Quaterniond(qw, qx, qy, qz)), Vec3(tx, ty, tz)}});
  }
  return poses;
}

void save_tum(const std::string& path, const std::vector<TumPose>& poses) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write TUM file: " + path);
  char line[512];
  for (const auto& p : poses) {
    const auto& q = p.pose.rotation.quaternion();
    std::snprintf(line, sizeof(line), "%.9f %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", p.t,
                  p.pose.translation.x(), p.pose.translation.y(), p.pose.translation.z(), q.x(),
                  q.y(), q.z(), q.w());
    out << line;
  }
}

EvaluationResult evaluate_trajectories(const std::vector<TumPose>& estimate,
                                       const std::vector<TumPose>& ground_truth,
                                       AlignMode mode) {
  constexpr double kMaxDt = 5e-3;
  if (estimate.empty() || ground_truth.empty()) {
    throw std::invalid_argument("evaluate: empty trajectory");
  }

  // Associate each estimate sample to the nearest ground-truth timestamp.
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < static_cast<int>(estimate.size()); ++i) {
    const double t = estimate[i].t;
    const auto it = std::lower_bound(
        ground_truth.begin(), ground_truth.end(), t,
        [](const TumPose& p, double value) { return p.t < value; });
    int best = -1;
    double best_dt = kMaxDt;
    for (const auto* cand : {it == ground_truth.end() ? nullptr : &*it,
                             it == ground_truth.begin() ? nullptr : &*(it - 1)}) {
      if (cand == nullptr) continue;
      const double dt = std::abs(cand->t - t);
      if (dt <= best_dt) {
        best_dt = dt;
        best = static_cast<int>(cand - ground_truth.data());
      }
    }
    if (best >= 0) pairs.emplace_back(i, best);
  }
  if (pairs.empty()) {
    throw std::invalid_argument("evaluate: no timestamp overlap within 5 ms");
  }

  RigidTransform align;  // identity
  if (mode == AlignMode::first_pose) {
    const auto& [ei, gi] = pairs.front();
    align = ground_truth[gi].pose * estimate[ei].pose.inverse();
  }

  EvaluationResult result;
  result.alignment = mode;
  double trans_sq = 0.0, rot_sq = 0.0;
  for (const auto& [ei, gi] : pairs) {
    const RigidTransform est = align * estimate[ei].pose;
    const RigidTransform& gt = ground_truth[gi].pose;
    SampleError e;
    e.t = estimate[ei].t;
    e.translation = (est.translation - gt.translation).norm();
    e.rotation = log_so3(gt.rotation.inverse() * est.rotation).norm();
    trans_sq += e.translation * e.translation;
    rot_sq += e.rotation * e.rotation;
    result.samples.push_back(e);
  }
  result.trans_rmse = std::sqrt(trans_sq / result.samples.size());
  result.rot_rmse = std::sqrt(rot_sq / result.samples.size());
  return result;
}

void save_evaluation_csv(const std::string& path, const EvaluationResult& result) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write evaluation file: " + path);
  out << "t,trans_err,rot_err\n";
  char line[128];
  for (const auto& s : result.samples) {
    std::snprintf(line, sizeof(line), "%.9f,%.9g,%.9g\n", s.t, s.translation, s.rotation);
    out << line;
  }
}

}  // namespace ctlio
