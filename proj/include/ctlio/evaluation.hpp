// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "ctlio/geometry.hpp"

namespace ctlio {

struct TumPose {
  double t = 0.0;
  RigidTransform pose;
};

/// TUM trajectory file: `t tx ty tz qx qy qz qw` per line.
std::vector<TumPose> load_tum(const std::string& path);
void save_tum(const std::string& path, const std::vector<TumPose>& poses);

enum class AlignMode { none, first_pose };

struct SampleError {
  double t = 0.0;
  double translation = 0.0;  // m
  double rotation = 0.0;     // rad
};

struct EvaluationResult {
  double trans_rmse = 0.0;
  double rot_rmse = 0.0;
  std::vector<SampleError> samples;
  AlignMode alignment = AlignMode::none;
};

/// Absolute pose error between two TUM files, associated by nearest timestamp
/// within 5 ms. first_pose alignment left-multiplies the estimate by
/// gt0 * est0^-1. Throws std::invalid_argument when no timestamps associate.
EvaluationResult evaluate_trajectories(const std::vector<TumPose>& estimate,
                                       const std::vector<TumPose>& ground_truth, AlignMode mode);

/// Per-sample error CSV: `t,trans_err,rot_err`.
void save_evaluation_csv(const std::string& path, const EvaluationResult& result);

}  // namespace ctlio
