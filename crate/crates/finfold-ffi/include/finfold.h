#ifndef FINFOLD_H
#define FINFOLD_H

/* Generated by cbindgen from finfold-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
enum FfStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  FF_STATUS_OK = 0,
  FF_STATUS_NULL_POINTER = 1,
  FF_STATUS_INVALID_UTF8 = 2,
  FF_STATUS_ARGUMENT = 3,
  FF_STATUS_DOMAIN = 4,
  FF_STATUS_NUMERIC = 5,
  FF_STATUS_NO_STEADY_PHASE = 6,
  FF_STATUS_DEGENERATE_DATA = 7,
  FF_STATUS_CIRCLE_DEGENERATE = 8,
  FF_STATUS_NO_OSCILLATION = 9,
  FF_STATUS_CALIBRATION = 10,
  FF_STATUS_CONFIG = 11,
  FF_STATUS_PARSE = 12,
  FF_STATUS_IO = 13,
  FF_STATUS_PANIC = 14,
};
#ifndef __cplusplus
typedef int32_t FfStatus;
#endif // __cplusplus

/**
 * Opaque simulator model: plant constants plus fitted coefficients.
 */
typedef struct FfModel FfModel;

/**
 * Opaque simulated or ingested run record.
 */
typedef struct FfTrajectory FfTrajectory;

/**
 * One integrator sample. `fin` is 0 folded, 1 erected.
 */
typedef struct FfSample {
  double t;
  double x;
  double y;
  double heading;
  double speed;
  int32_t fin;
  double p_caudal_w;
  double p_dorsal_w;
} FfSample;

/**
 * Burst-phase regression result.
 */
typedef struct FfAccelFit {
  /**
   * Fitted constant acceleration, m/s^2.
   */
  double accel_mps2;
  /**
   * Coefficient of determination of the through-origin quadratic fit.
   */
  double r_squared;
  /**
   * Length of the fitted window, s.
   */
  double window_s;
} FfAccelFit;

/**
 * Full straight-run analysis: burst fit plus cruise speed.
 */
typedef struct FfRunAnalysis {
  /**
   * Detected end of the acceleration phase, s.
   */
  double t_accel_end_s;
  struct FfAccelFit accel;
  /**
   * Cruise speed regressed over the settled phase, m/s.
   */
  double steady_speed_mps;
} FfRunAnalysis;

/**
 * Fitted steady turn.
 */
typedef struct FfTurnFit {
  /**
   * Circle radius, m.
   */
  double radius_m;
  /**
   * Signed yaw rate, rad/s (positive = counterclockwise).
   */
  double angular_speed_radps;
  double center_x_m;
  double center_y_m;
  /**
   * Root-mean-square radial misfit, m.
   */
  double residual_rms_m;
} FfTurnFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message from the most recent failing call on this thread, empty before
 * the first failure. The pointer stays valid until the next failing call
 * on the same thread; do not free it.
 */
const char *ff_last_error(void);

/**
 * Library version as a static nul-terminated string; do not free it.
 */
const char *ff_version(void);

/**
 * Model with the shipped default coefficients. Never fails; release with
 * `ff_model_free`.
 */
struct FfModel *ff_model_default(void);

/**
 * Model from the JSON text written by the calibrator (extra bookkeeping
 * keys are ignored, unknown coefficient names rejected). On success stores
 * a new handle in `out`.
 *
 * # Safety
 * `json` must point to a nul-terminated string and `out` to a writable
 * pointer slot; both stay borrowed only for the duration of the call.
 */
FfStatus ff_model_from_json(const char *json, struct FfModel **out);

/**
 * Release a model handle. Null is ignored.
 *
 * # Safety
 * `model` must be a handle from `ff_model_default` or
 * `ff_model_from_json` that has not been freed yet.
 */
void ff_model_free(struct FfModel *model);

/**
 * Simulate a straight run under a fin schedule given as parallel arrays of
 * switch times (seconds, first must be 0) and fin-state codes (0 = folded,
 * 1 = erected). `n_switches == 0` means fins folded throughout. On success
 * stores a new trajectory handle in `out`; release it with
 * `ff_trajectory_free`.
 *
 * # Safety
 * `model` must be a live model handle; `switch_times_s` and
 * `switch_states` must point to `n_switches` readable elements when
 * `n_switches > 0`; `out` must be writable.
 */
FfStatus ff_simulate_straight(const struct FfModel *model,
                              double frequency_hz,
                              double amplitude_deg,
                              const double *switch_times_s,
                              const int32_t *switch_states,
                              size_t n_switches,
                              double duration_s,
                              double dt_s,
                              struct FfTrajectory **out);

/**
 * Simulate a planar turn with a constant fin state (0 = folded,
 * 1 = erected) and a nonzero tail bias. On success stores a new trajectory
 * handle in `out`.
 *
 * # Safety
 * `model` must be a live model handle and `out` writable.
 */
FfStatus ff_simulate_turn(const struct FfModel *model,
                          double frequency_hz,
                          double amplitude_deg,
                          double bias_deg,
                          int32_t fin_state,
                          double duration_s,
                          double dt_s,
                          struct FfTrajectory **out);

/**
 * Number of samples in a trajectory; 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live trajectory handle.
 */
size_t ff_trajectory_len(const struct FfTrajectory *traj);

/**
 * Sampling interval of a trajectory, s; 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live trajectory handle.
 */
double ff_trajectory_dt(const struct FfTrajectory *traj);

/**
 * Copy sample `index` into `out`.
 *
 * # Safety
 * `traj` must be a live trajectory handle and `out` writable.
 */
FfStatus ff_trajectory_sample(const struct FfTrajectory *traj, size_t index, struct FfSample *out);

/**
 * Release a trajectory handle. Null is ignored.
 *
 * # Safety
 * `traj` must be a handle from a simulate call that has not been freed yet.
 */
void ff_trajectory_free(struct FfTrajectory *traj);

/**
 * Detect the end of the acceleration phase of a straight run and store it
 * in `out_t_s`.
 *
 * # Safety
 * `traj` must be a live trajectory handle and `out_t_s` writable.
 */
FfStatus ff_detect_phases(const struct FfTrajectory *traj, double *out_t_s);

/**
 * Fit a constant acceleration over the record up to `until_s`
 * (`until_s <= 0` fits the whole record).
 *
 * # Safety
 * `traj` must be a live trajectory handle and `out` writable.
 */
FfStatus ff_fit_acceleration(const struct FfTrajectory *traj,
                             double until_s,
                             struct FfAccelFit *out);

/**
 * Regress the cruise speed over the record from `from_s` on
 * (`from_s <= 0` uses the whole record) and store it in `out_speed_mps`.
 *
 * # Safety
 * `traj` must be a live trajectory handle and `out_speed_mps` writable.
 */
FfStatus ff_fit_steady_speed(const struct FfTrajectory *traj, double from_s, double *out_speed_mps);

/**
 * Split a straight run into burst and cruise phases and fit both.
 *
 * # Safety
 * `traj` must be a live trajectory handle and `out` writable.
 */
FfStatus ff_analyze_run(const struct FfTrajectory *traj, struct FfRunAnalysis *out);

/**
 * Fit a turning circle to the record from `trim_s` on (`trim_s <= 0` uses
 * the whole record).
 *
 * # Safety
 * `traj` must be a live trajectory handle and `out` writable.
 */
FfStatus ff_fit_turning(const struct FfTrajectory *traj, double trim_s, struct FfTurnFit *out);

/**
 * Cost of transport `P / (m g U)`, dimensionless, stored in `out`.
 *
 * # Safety
 * `out` must be writable.
 */
FfStatus ff_cost_of_transport(double mean_power_w,
                              double mass_kg,
                              double mean_speed_mps,
                              double *out);

/**
 * Strouhal number `f A / U`, dimensionless, stored in `out`.
 *
 * # Safety
 * `out` must be writable.
 */
FfStatus ff_strouhal(double frequency_hz, double peak_to_peak_m, double speed_mps, double *out);

/**
 * Reynolds number `U L / nu`, dimensionless.
 */
double ff_reynolds(double speed_mps, double length_m, double viscosity_m2ps);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* FINFOLD_H */
