#ifndef IMPULSEKIT_H
#define IMPULSEKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ImpStatus {
  IMP_STATUS_OK = 0,
  IMP_STATUS_NULL_POINTER = 1,
  IMP_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Malformed or schema-violating session JSON.
   */
  IMP_STATUS_PARSE = 3,
  /**
   * Input is valid but the quantity is undefined for it.
   */
  IMP_STATUS_DEGENERATE = 4,
  IMP_STATUS_INDEX_OUT_OF_RANGE = 5,
  IMP_STATUS_PANIC = 6,
} ImpStatus;

typedef enum ImpAcceleration {
  IMP_ACCELERATION_TIME_NORMALIZED = 0,
  IMP_ACCELERATION_PER_STEP = 1,
} ImpAcceleration;

typedef enum ImpVariant {
  IMP_VARIANT_SOFTMAX_HYPERBOLIC = 0,
  IMP_VARIANT_LITERAL_EXPONENT = 1,
} ImpVariant;

/**
 * Opaque parsed session.
 */
typedef struct ImpSession ImpSession;

/**
 * Opaque validated cursor path.
 */
typedef struct ImpTrajectory ImpTrajectory;

typedef struct ImpSample {
  double t_ms;
  double x;
  double y;
} ImpSample;

typedef struct ImpFeatures {
  double total_distance;
  double max_velocity;
  double max_acceleration;
  /**
   * NaN when `has_auc` is false.
   */
  double auc;
  bool has_auc;
  /**
   * NaN when `has_stopping_distance` is false.
   */
  double stopping_distance;
  bool has_stopping_distance;
  bool chord_fallback;
} ImpFeatures;

typedef struct ImpSsrtOptions {
  /**
   * Omitted go trials enter the distribution at `cap_ms` instead of being dropped.
   */
  bool assign_max;
  /**
   * Interpolated quantile instead of the n-th order statistic.
   */
  bool interpolate;
  double cap_ms;
} ImpSsrtOptions;

typedef struct ImpSsrt {
  double ssrt;
  double quantile_rt;
  double mean_ssd;
  double p_respond;
  size_t n_go_used;
  size_t n_stop;
} ImpSsrt;

typedef struct ImpChoice {
  double amount_ss;
  double delay_ss;
  double amount_ll;
  double delay_ll;
  bool chose_larger_later;
  bool is_control;
} ImpChoice;

typedef struct ImpDiscountFit {
  double k;
  double beta;
  double log_likelihood;
  bool converged;
  bool at_bound;
  bool degenerate_choices;
  size_t n_trials;
} ImpDiscountFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *imp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *imp_version(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 */
void imp_string_free(char *s);

/**
 * Builds a trajectory from `n` samples. A click target is used only when
 * `has_target` is true.
 */
enum ImpStatus imp_trajectory_new(const struct ImpSample *samples,
                                  size_t n,
                                  double start_x,
                                  double start_y,
                                  bool has_target,
                                  double target_x,
                                  double target_y,
                                  struct ImpTrajectory **out_traj);

void imp_trajectory_free(struct ImpTrajectory *traj);

/**
 * Number of samples, or 0 for NULL.
 */
size_t imp_trajectory_len(const struct ImpTrajectory *traj);

/**
 * All five movement features. `stop_onset_ms` is used only when
 * `has_stop_onset` is true.
 */
enum ImpStatus imp_trajectory_features(const struct ImpTrajectory *traj,
                                       bool has_stop_onset,
                                       double stop_onset_ms,
                                       enum ImpAcceleration mode,
                                       struct ImpFeatures *out_features);

/**
 * Exclude omissions, n-th order statistic, 3000 ms cap.
 */
struct ImpSsrtOptions imp_ssrt_options_default(void);

/**
 * SSRT by the integration method. `go_rts` holds one RT per go trial with
 * NaN marking an omission; `ssd_ms[i]` and `responded[i]` describe stop trial i.
 */
enum ImpStatus imp_ssrt_integration(const double *go_rts,
                                    size_t n_go,
                                    const double *ssd_ms,
                                    const bool *responded,
                                    size_t n_stop,
                                    struct ImpSsrtOptions opts,
                                    struct ImpSsrt *out_ssrt);

/**
 * Rank-based inverse normal transform of `n` values into `out_values`
 * (which may alias `values`).
 */
enum ImpStatus imp_rank_inverse_normal(const double *values, size_t n, double *out_values);

/**
 * Probability of choosing the larger-later option (the `chose_larger_later`
 * field is ignored).
 */
enum ImpStatus imp_choice_probability(const struct ImpChoice *choice,
                                      double k,
                                      double beta,
                                      enum ImpVariant model,
                                      double *out_p);

/**
 * Maximum-likelihood fit of `k` and `beta`; control trials are skipped.
 */
enum ImpStatus imp_fit_discounting(const struct ImpChoice *choices,
                                   size_t n,
                                   enum ImpVariant model,
                                   struct ImpDiscountFit *out_fit);

/**
 * Parses one session JSON document (NUL-terminated UTF-8).
 */
enum ImpStatus imp_session_parse(const char *json, bool strict, struct ImpSession **out_session);

void imp_session_free(struct ImpSession *session);

/**
 * Borrowed subject id, valid while the session lives. NULL for NULL.
 */
const char *imp_session_subject_id(const struct ImpSession *session);

/**
 * Number of trials, or 0 for NULL.
 */
size_t imp_session_trial_count(const struct ImpSession *session);

/**
 * Copy of trial `index`'s cursor path as a new trajectory handle.
 */
enum ImpStatus imp_session_trajectory(const struct ImpSession *session,
                                      size_t index,
                                      struct ImpTrajectory **out_traj);

/**
 * Canonical compact JSON for the session. Free with [`imp_string_free`].
 */
enum ImpStatus imp_session_to_json(const struct ImpSession *session, char **out_json);

/**
 * Per-subject and per-condition summaries (default options) as a JSON
 * array. Free with [`imp_string_free`].
 */
enum ImpStatus imp_session_summaries_json(const struct ImpSession *session, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IMPULSEKIT_H */
