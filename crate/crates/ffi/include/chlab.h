#ifndef CHLAB_H
#define CHLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ChlabStatus {
  CHLAB_STATUS_OK = 0,
  CHLAB_STATUS_NULL_POINTER = 1,
  CHLAB_STATUS_INVALID_ARGUMENT = 2,
  CHLAB_STATUS_HYPOTHESIS = 3,
  CHLAB_STATUS_BLOW_UP = 4,
  CHLAB_STATUS_DEGENERATE_NOISE = 5,
  CHLAB_STATUS_CONFIG = 6,
  CHLAB_STATUS_IO = 7,
  CHLAB_STATUS_PANIC = 8,
} ChlabStatus;

/**
 * Validated model: grid, drift, noise coefficient and initial datum.
 */
typedef struct ChlabModel ChlabModel;

/**
 * Sampled path on the model's space-time grid.
 */
typedef struct ChlabTrajectory ChlabTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *chlab_last_error(void);

/**
 * Default model (`f(u) = u^3 - u`, `sigma = 1`, `u0 = cos x_1`) on the
 * given grid.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum ChlabStatus chlab_model_default(size_t d,
                                     size_t n,
                                     double horizon,
                                     size_t nt,
                                     struct ChlabModel **out);

/**
 * Model from a TOML document holding a `[grid]` table and an optional
 * `[model]` table, in the run-config dialect.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` valid for writes.
 */
enum ChlabStatus chlab_model_from_toml(const char *text, struct ChlabModel **out);

/**
 * # Safety
 * `m` must come from a `chlab_model_*` constructor and not be used again.
 */
void chlab_model_free(struct ChlabModel *m);

/**
 * Deterministic limit `u0`.
 *
 * # Safety
 * `m` must be a live model and `out` valid for writes.
 */
enum ChlabStatus chlab_solve_u0(const struct ChlabModel *m, struct ChlabTrajectory **out);

/**
 * `u^eps` driven by the noise path of `seed`.
 *
 * # Safety
 * `m` must be a live model and `out` valid for writes.
 */
enum ChlabStatus chlab_solve_u_eps(const struct ChlabModel *m,
                                   double eps,
                                   uint64_t seed,
                                   struct ChlabTrajectory **out);

/**
 * Fluctuation limit `Y` driven by the noise path of `seed`.
 *
 * # Safety
 * `m` must be a live model and `out` valid for writes.
 */
enum ChlabStatus chlab_solve_y(const struct ChlabModel *m,
                               uint64_t seed,
                               struct ChlabTrajectory **out);

/**
 * Skeleton path `Z^v` for `v(t, x) = amplitude sin(t) cos(x_1)`.
 *
 * # Safety
 * `m` must be a live model and `out` valid for writes.
 */
enum ChlabStatus chlab_target_path(const struct ChlabModel *m,
                                   double amplitude,
                                   struct ChlabTrajectory **out);

/**
 * Number of stored instants, `nt + 1`; 0 for a null handle.
 *
 * # Safety
 * `t` must be null or a live trajectory.
 */
size_t chlab_trajectory_frames(const struct ChlabTrajectory *t);

/**
 * Spatial points per frame, `n^d`; 0 for a null handle.
 *
 * # Safety
 * `t` must be null or a live trajectory.
 */
size_t chlab_trajectory_points(const struct ChlabTrajectory *t);

/**
 * Row-major values, frames × points, owned by the handle.
 *
 * # Safety
 * `t` must be null or a live trajectory.
 */
const double *chlab_trajectory_data(const struct ChlabTrajectory *t);

/**
 * Time of frame `j`, or NaN when out of range.
 *
 * # Safety
 * `t` must be null or a live trajectory.
 */
double chlab_trajectory_time(const struct ChlabTrajectory *t, size_t j);

/**
 * # Safety
 * `t` must come from a solver call and not be used again.
 */
void chlab_trajectory_free(struct ChlabTrajectory *t);

/**
 * Quadrature `L^p` norm of frame `j`.
 *
 * # Safety
 * `t` must be a live trajectory and `out` valid for writes.
 */
enum ChlabStatus chlab_lp_norm(const struct ChlabTrajectory *t, size_t j, double p, double *out);

/**
 * `sup_t ||X(t)||_p`.
 *
 * # Safety
 * `t` must be a live trajectory and `out` valid for writes.
 */
enum ChlabStatus chlab_sup_lp(const struct ChlabTrajectory *t, double p, double *out);

/**
 * `||G_t(x, .)||_2` at the node with multi-index `x[0..d]` of the model grid,
 * for each of `len` times.
 *
 * # Safety
 * `x` must hold `d` entries; `times` and `out` must hold `len` entries.
 */
enum ChlabStatus chlab_kernel_profile(const struct ChlabModel *m,
                                      const size_t *x,
                                      const double *times,
                                      size_t len,
                                      double *out);

/**
 * Rate `I(g)` of a target path on the model grid.
 *
 * # Safety
 * `m` and `g` must be live handles and `out` valid for writes.
 */
enum ChlabStatus chlab_rate_eval(const struct ChlabModel *m,
                                 const struct ChlabTrajectory *g,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHLAB_H */
