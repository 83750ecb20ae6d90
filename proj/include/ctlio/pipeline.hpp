// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "ctlio/evaluation.hpp"

namespace ctlio::pipeline {

/// Synthesizes a dataset from a simulator config. A non-negative
/// seed_override wins over the config's seed.
void run_simulate(const std::string& config_path, const std::string& out_dir,
                  long seed_override = -1);

/// Runs the odometry over a dataset directory; config_path may be empty for
/// defaults. Writes trajectory.txt, poses.tum, report.csv, keyscans.csv,
/// bias.txt, map.ply and run_manifest.txt into out_dir.
void run_odometry(const std::string& dataset_dir, const std::string& config_path,
                  const std::string& out_dir);

/// Two-stage correction of an odometry run against a loop-constraint file.
/// Writes corrected_trajectory.txt, corrected_poses.tum, keyscans_corrected.csv
/// and ape_summary.txt into out_dir.
void run_loop_correct(const std::string& odometry_dir, const std::string& constraints_path,
                      const std::string& out_dir);

/// APE between two TUM files; optionally dumps per-sample errors as CSV.
EvaluationResult run_evaluate(const std::string& estimate_tum, const std::string& gt_tum,
                              AlignMode mode, const std::string& per_sample_csv = "");

/// Trajectory-derivative vs raw-IMU series (plot_accel.csv / plot_gyro.csv)
/// for a finished odometry or loop-correction run directory.
void run_plot_data(const std::string& run_dir, const std::string& out_dir);

}  // namespace ctlio::pipeline
