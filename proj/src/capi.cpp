// SPDX-License-Identifier: Apache-2.0

#include "ctlio/capi.h"

#include <string>

#include "ctlio/errors.hpp"
#include "ctlio/pipeline.hpp"
#include "ctlio/trajectory.hpp"

namespace {

thread_local std::string g_last_error;

ctlio_status fail(ctlio_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <typename Fn>
ctlio_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return CTLIO_OK;
  } catch (const ctlio::RangeError& e) {
    return fail(CTLIO_ERROR_RANGE, e.what());
  } catch (const ctlio::ConfigError& e) {
    return fail(CTLIO_ERROR_CONFIG, e.what());
  } catch (const ctlio::IoError& e) {
    return fail(CTLIO_ERROR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(CTLIO_ERROR_INVALID, e.what());
  } catch (const std::exception& e) {
    return fail(CTLIO_ERROR_RUNTIME, e.what());
  }
}

ctlio_status require(const void* p, const char* name) {
  return p == nullptr ? fail(CTLIO_ERROR_INVALID, std::string(name) + " must not be NULL")
                      : CTLIO_OK;
}

}  // namespace

struct ctlio_trajectory {
  ctlio::Trajectory impl;
};

extern "C" {

const char* ctlio_last_error(void) { return g_last_error.c_str(); }

const char* ctlio_version(void) { return "0.1.0"; }

ctlio_status ctlio_simulate(const char* config_path, const char* out_dir, long seed_override) {
  if (require(config_path, "config_path") || require(out_dir, "out_dir")) {
    return CTLIO_ERROR_INVALID;
  }
  return guarded([&] { ctlio::pipeline::run_simulate(config_path, out_dir, seed_override); });
}

ctlio_status ctlio_odometry(const char* dataset_dir, const char* config_path,
                            const char* out_dir) {
  if (require(dataset_dir, "dataset_dir") || require(out_dir, "out_dir")) {
    return CTLIO_ERROR_INVALID;
  }
  const std::string config = config_path == nullptr ? "" : config_path;
  return guarded([&] { ctlio::pipeline::run_odometry(dataset_dir, config, out_dir); });
}

ctlio_status ctlio_loop_correct(const char* odometry_dir, const char* constraints_path,
                                const char* out_dir) {
  if (require(odometry_dir, "odometry_dir") || require(constraints_path, "constraints_path") ||
      require(out_dir, "out_dir")) {
    return CTLIO_ERROR_INVALID;
  }
  return guarded(
      [&] { ctlio::pipeline::run_loop_correct(odometry_dir, constraints_path, out_dir); });
}

ctlio_status ctlio_evaluate(const char* estimate_tum, const char* gt_tum, int align_first_pose,
                            const char* per_sample_csv, double* trans_rmse, double* rot_rmse) {
  if (require(estimate_tum, "estimate_tum") || require(gt_tum, "gt_tum")) {
    return CTLIO_ERROR_INVALID;
  }
  return guarded([&] {
    const auto result = ctlio::pipeline::run_evaluate(
        estimate_tum, gt_tum,
        align_first_pose != 0 ? ctlio::AlignMode::first_pose : ctlio::AlignMode::none,
        per_sample_csv == nullptr ? "" : per_sample_csv);
    if (trans_rmse != nullptr) *trans_rmse = result.trans_rmse;
    if (rot_rmse != nullptr) *rot_rmse = result.rot_rmse;
  });
}

ctlio_status ctlio_plot_data(const char* run_dir, const char* out_dir) {
  if (require(run_dir, "run_dir") || require(out_dir, "out_dir")) return CTLIO_ERROR_INVALID;
  return guarded([&] { ctlio::pipeline::run_plot_data(run_dir, out_dir); });
}

ctlio_status ctlio_trajectory_load(const char* path, ctlio_trajectory** out) {
  if (require(path, "path") || require(out, "out")) return CTLIO_ERROR_INVALID;
  return guarded([&] { *out = new ctlio_trajectory{ctlio::Trajectory::load(path)}; });
}

void ctlio_trajectory_free(ctlio_trajectory* traj) { delete traj; }

ctlio_status ctlio_trajectory_time_range(const ctlio_trajectory* traj, double* t_min,
                                         double* t_max) {
  if (require(traj, "traj")) return CTLIO_ERROR_INVALID;
  if (t_min != nullptr) *t_min = traj->impl.min_time();
  if (t_max != nullptr) *t_max = traj->impl.max_time();
  return CTLIO_OK;
}

ctlio_status ctlio_trajectory_pose(const ctlio_trajectory* traj, double t, double pose[7]) {
  if (require(traj, "traj") || require(pose, "pose")) return CTLIO_ERROR_INVALID;
  return guarded([&] {
    const ctlio::RigidTransform T = traj->impl.pose(t);
    pose[0] = T.translation.x();
    pose[1] = T.translation.y();
    pose[2] = T.translation.z();
    pose[3] = T.rotation.quaternion().x();
    pose[4] = T.rotation.quaternion().y();
    pose[5] = T.rotation.quaternion().z();
    pose[6] = T.rotation.quaternion().w();
  });
}

ctlio_status ctlio_trajectory_export_tum(const ctlio_trajectory* traj, double rate_hz,
                                         const char* out_path) {
  if (require(traj, "traj") || require(out_path, "out_path")) return CTLIO_ERROR_INVALID;
  if (rate_hz <= 0.0) return fail(CTLIO_ERROR_INVALID, "rate_hz must be positive");
  return guarded([&] { traj->impl.export_tum(out_path, rate_hz); });
}

}  // extern "C"
