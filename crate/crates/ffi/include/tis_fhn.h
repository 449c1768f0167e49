#ifndef TIS_FHN_H
#define TIS_FHN_H

#include <stdbool.h>
#include <stddef.h>

typedef enum TfDriveKind {
  TF_DRIVE_KIND_AVERAGED_COSINE = 0,
  TF_DRIVE_KIND_SIGN_COSINE = 1,
  TF_DRIVE_KIND_FROZEN_CONSTANT = 2,
  TF_DRIVE_KIND_RAW_INTERFERENCE = 3,
} TfDriveKind;

typedef enum TfMethod {
  TF_METHOD_FIXED_RK4 = 0,
  TF_METHOD_ADAPTIVE_RK45 = 1,
} TfMethod;

typedef enum TfStatus {
  TF_STATUS_OK = 0,
  TF_STATUS_NULL_POINTER = 1,
  TF_STATUS_INVALID_PARAMETER = 2,
  /*
   Envelope value or point outside the domain of the operation.
   */
  TF_STATUS_DOMAIN = 3,
  /*
   Parameters outside the region an analysis requires.
   */
  TF_STATUS_REGION = 4,
  /*
   Integration diverged or a singular arc could not be continued.
   */
  TF_STATUS_NUMERICAL = 5,
  TF_STATUS_BUFFER_TOO_SMALL = 6,
  TF_STATUS_IO = 7,
  TF_STATUS_PANIC = 8,
} TfStatus;

/*
 Opaque parameter set.
 */
typedef struct TfParams TfParams;

/*
 Opaque stored trajectory.
 */
typedef struct TfTrajectory TfTrajectory;

/*
 Integrator settings. `dt` is used by `FixedRk4`; the tolerances and
 `max_dt` by `AdaptiveRk45`.
 */
typedef struct TfIntegrator {
  enum TfMethod method;
  double dt;
  double rel_tol;
  double abs_tol;
  double max_dt;
  size_t sample_stride;
} TfIntegrator;

typedef struct TfRegion {
  bool in_e_unique;
  bool in_e_les_sufficient;
  bool in_e_0;
  bool in_e_ges_small_eps;
  /*
   Meaningful only when `in_e_0` is set.
   */
  bool no_spiking_condition;
  bool piecewise_spiking_condition;
} TfRegion;

/*
 Envelope description. `x` is `eta`, `c` or `omega1` by kind; `y` is
 `omega2` for `RawInterference` and ignored otherwise.
 */
typedef struct TfDrive {
  enum TfDriveKind kind;
  double x;
  double y;
} TfDrive;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failure on this thread, or null. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *tf_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *tf_version(void);

/*
 # Safety
 `out` must be valid for writes. On success `*out` owns a handle to be
 released with [`tf_params_free`].
 */
enum TfStatus tf_params_new(double a,
                            double b,
                            double beta,
                            double gamma,
                            double epsilon,
                            struct TfParams **out);

/*
 # Safety
 `p` must be null or a handle from [`tf_params_new`] not yet freed.
 */
void tf_params_free(struct TfParams *p);

/*
 Default integrator settings (adaptive).

 # Safety
 `out` must be valid for writes.
 */
enum TfStatus tf_integrator_default(struct TfIntegrator *out);

/*
 Leftmost equilibrium of the frozen system at envelope value `c`.

 # Safety
 `p` must be a live handle; `v_e` and `w_e` must be valid for writes.
 */
enum TfStatus tf_equilibrium(const struct TfParams *p, double c, double *v_e, double *w_e);

/*
 Fold point `(v_m, w_m)` of the nullcline at `c`.

 # Safety
 `p` must be a live handle; `v_m` and `w_m` must be valid for writes.
 */
enum TfStatus tf_fold_point(const struct TfParams *p, double c, double *v_m, double *w_m);

/*
 # Safety
 `p` must be a live handle; `out` must be valid for writes.
 */
enum TfStatus tf_classify(const struct TfParams *p, size_t c_grid, struct TfRegion *out);

/*
 # Safety
 `p` must be a live handle; `kappa_star` and `c_star` must be valid for
 writes.
 */
enum TfStatus tf_kappa_threshold(const struct TfParams *p,
                                 double tol,
                                 double *kappa_star,
                                 double *c_star);

/*
 Sets `*reaches_c1` when the `X_up` arc from rest reaches `C_1` first.

 # Safety
 `p` must be a live handle; `reaches_c1` must be valid for writes.
 */
enum TfStatus tf_check_theorem3(const struct TfParams *p, double kappa, bool *reaches_c1);

/*
 Escaping two-leg construction. `landing_c` receives the `c` of the fold
 hit, or NaN when there is none. `landing_c` may be null.

 # Safety
 `p` must be a live handle; `holds` must be valid for writes; `landing_c`
 must be null or valid for writes.
 */
enum TfStatus tf_check_assumption_e(const struct TfParams *p,
                                    double kappa,
                                    bool *holds,
                                    double *landing_c);

/*
 Integrates from `(v0, w0)` over `[0, t_final]`. `integrator` may be null
 for the defaults.

 # Safety
 `p` must be a live handle; `drive` must be valid for reads; `integrator`
 must be null or valid for reads; `out` must be valid for writes. On
 success `*out` is released with [`tf_trajectory_free`].
 */
enum TfStatus tf_simulate(const struct TfParams *p,
                          const struct TfDrive *drive,
                          double v0,
                          double w0,
                          double t_final,
                          const struct TfIntegrator *integrator,
                          struct TfTrajectory **out);

/*
 # Safety
 `t` must be null or a handle from [`tf_simulate`] not yet freed.
 */
void tf_trajectory_free(struct TfTrajectory *t);

/*
 # Safety
 `t` must be a live handle; `len` must be valid for writes.
 */
enum TfStatus tf_trajectory_len(const struct TfTrajectory *t, size_t *len);

/*
 Copies the samples into caller buffers of `capacity` elements each.
 Returns `BufferTooSmall` (copying nothing) when `capacity` is short.

 # Safety
 `traj` must be a live handle; `t`, `v` and `w` must each be valid for
 `capacity` writes.
 */
enum TfStatus tf_trajectory_copy(const struct TfTrajectory *traj,
                                 double *t,
                                 double *v,
                                 double *w,
                                 size_t capacity);

/*
 Default detector levels: fire at 0, re-arm at `v_e(-1) / 2`.

 # Safety
 `p` must be a live handle; `arm` and `fire` must be valid for writes.
 */
enum TfStatus tf_spike_levels_default(const struct TfParams *p, double *arm, double *fire);

/*
 Hysteresis spike count with `arm < fire`.

 # Safety
 `t` must be a live handle; `count` must be valid for writes.
 */
enum TfStatus tf_count_spikes(const struct TfTrajectory *t, double arm, double fire, size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TIS_FHN_H */
