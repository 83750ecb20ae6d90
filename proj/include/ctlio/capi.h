/* SPDX-License-Identifier: Apache-2.0 */

/* C API of the continuous-time LiDAR-inertial estimation library. All entry
 * points return a status code; ctlio_last_error() describes the most recent
 * failure on the calling thread. Handles are opaque and owned by the caller
 * through the matching *_free function. */

#ifndef CTLIO_CAPI_H
#define CTLIO_CAPI_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ctlio_status {
  CTLIO_OK = 0,
  CTLIO_ERROR_IO = 1,      /* unreadable/malformed file or unwritable output */
  CTLIO_ERROR_CONFIG = 2,  /* unknown or invalid configuration key/value */
  CTLIO_ERROR_RANGE = 3,   /* query outside the evaluable time range */
  CTLIO_ERROR_INVALID = 4, /* invalid argument */
  CTLIO_ERROR_RUNTIME = 5  /* anything else */
} ctlio_status;

/* Message of the last failing call on this thread; empty string if none. */
const char* ctlio_last_error(void);

const char* ctlio_version(void);

/* --- batch pipeline ------------------------------------------------------ */

/* Synthesizes a dataset. seed_override >= 0 beats the config's seed. */
ctlio_status ctlio_simulate(const char* config_path, const char* out_dir, long seed_override);

/* Runs odometry over a dataset; config_path may be NULL for defaults. */
ctlio_status ctlio_odometry(const char* dataset_dir, const char* config_path,
                            const char* out_dir);

/* Two-stage loop correction of a finished odometry run. */
ctlio_status ctlio_loop_correct(const char* odometry_dir, const char* constraints_path,
                                const char* out_dir);

/* Absolute pose error between two TUM files. align_first_pose: 0 or 1.
 * per_sample_csv may be NULL. Outputs may be NULL when not wanted. */
ctlio_status ctlio_evaluate(const char* estimate_tum, const char* gt_tum, int align_first_pose,
                            const char* per_sample_csv, double* trans_rmse, double* rot_rmse);

/* Trajectory-derivative vs raw-IMU plot series for a finished run. */
ctlio_status ctlio_plot_data(const char* run_dir, const char* out_dir);

/* --- trajectory handle ---------------------------------------------------- */

typedef struct ctlio_trajectory ctlio_trajectory;

ctlio_status ctlio_trajectory_load(const char* path, ctlio_trajectory** out);
void ctlio_trajectory_free(ctlio_trajectory* traj);

ctlio_status ctlio_trajectory_time_range(const ctlio_trajectory* traj, double* t_min,
                                         double* t_max);

/* Pose at time t as [tx ty tz qx qy qz qw]. */
ctlio_status ctlio_trajectory_pose(const ctlio_trajectory* traj, double t, double pose[7]);

/* Writes poses sampled at rate_hz in TUM format. */
ctlio_status ctlio_trajectory_export_tum(const ctlio_trajectory* traj, double rate_hz,
                                         const char* out_path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CTLIO_CAPI_H */
