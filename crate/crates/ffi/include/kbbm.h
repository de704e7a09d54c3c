#ifndef KBBM_H
#define KBBM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KbbmStatus {
  KBBM_STATUS_OK = 0,
  KBBM_STATUS_NULL_POINTER = 1,
  KBBM_STATUS_INVALID_ARGUMENT = 2,
  KBBM_STATUS_CONSTRAINT_VIOLATION = 3,
  KBBM_STATUS_NON_FINITE = 4,
  KBBM_STATUS_SYMMETRY_VIOLATION = 5,
  KBBM_STATUS_GRID_MISMATCH = 6,
  KBBM_STATUS_OVERFLOW = 7,
  KBBM_STATUS_NO_CONVERGENCE = 8,
  KBBM_STATUS_QUADRATURE_RESOLUTION = 9,
  KBBM_STATUS_BLOW_UP = 10,
  KBBM_STATUS_STEP_COLLAPSE = 11,
  KBBM_STATUS_RANGE = 12,
  KBBM_STATUS_PANIC = 13,
} KbbmStatus;

/**
 * Validated equation coefficients.
 */
typedef struct KbbmCoefficients KbbmCoefficients;

/**
 * Periodic grid on [−L, L).
 */
typedef struct KbbmGrid KbbmGrid;

/**
 * A real field stored by its Fourier coefficients.
 */
typedef struct KbbmState KbbmState;

/**
 * Sampled output of a time integration.
 */
typedef struct KbbmTrajectory KbbmTrajectory;

/**
 * One sampled time of a trajectory. `sigma_hat` is NaN where the decay fit
 * is undefined.
 */
typedef struct KbbmRecord {
  double t;
  double energy;
  double h2_norm;
  double gevrey_norm;
  double sigma_hat;
} KbbmRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *kbbm_last_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *kbbm_version(void);

/**
 * The Hamiltonian reference coefficients.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum KbbmStatus kbbm_coefficients_default(struct KbbmCoefficients **out);

/**
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum KbbmStatus kbbm_coefficients_new(double gamma1,
                                      double gamma2,
                                      double delta1,
                                      double delta2,
                                      double gamma,
                                      struct KbbmCoefficients **out);

/**
 * # Safety
 * `c` must be null or a handle from this library, not yet freed.
 */
void kbbm_coefficients_free(struct KbbmCoefficients *c);

/**
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum KbbmStatus kbbm_grid_new(size_t n_modes, double half_length, struct KbbmGrid **out);

/**
 * Number of modes, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live grid handle.
 */
size_t kbbm_grid_n_modes(const struct KbbmGrid *g);

/**
 * # Safety
 * `g` must be null or a handle from this library, not yet freed.
 */
void kbbm_grid_free(struct KbbmGrid *g);

/**
 * Builds a state from `len` samples at the grid nodes x_j = −L + 2Lj/n;
 * `len` must equal the number of modes.
 *
 * # Safety
 * `samples` must point to `len` readable doubles; `out` must be valid for a
 * pointer write.
 */
enum KbbmStatus kbbm_state_from_samples(const struct KbbmGrid *grid,
                                        const double *samples,
                                        size_t len,
                                        struct KbbmState **out);

/**
 * Writes the state's `len` physical samples into `out`.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum KbbmStatus kbbm_state_samples(const struct KbbmState *state, double *out, size_t len);

/**
 * # Safety
 * `s` must be null or a handle from this library, not yet freed.
 */
void kbbm_state_free(struct KbbmState *s);

/**
 * ‖state‖ in G^{σ,s}.
 *
 * # Safety
 * `state` must be a live handle and `out` valid for a write.
 */
enum KbbmStatus kbbm_gevrey_norm(const struct KbbmState *state,
                                 double sigma,
                                 double s,
                                 double *out);

/**
 * Conserved energy of the state.
 *
 * # Safety
 * Handles must be live and `out` valid for a write.
 */
enum KbbmStatus kbbm_energy(const struct KbbmState *state,
                            const struct KbbmCoefficients *coeffs,
                            double *out);

/**
 * Decay-rate estimate of the analyticity radius; writes NaN when the fit is
 * undefined.
 *
 * # Safety
 * `state` must be live; `sigma_hat` valid for a write.
 */
enum KbbmStatus kbbm_estimate_radius(const struct KbbmState *state,
                                     double noise_floor,
                                     double *sigma_hat);

/**
 * Free evolution S(t) applied to `state`.
 *
 * # Safety
 * Handles must be live; `out` valid for a pointer write.
 */
enum KbbmStatus kbbm_linear_propagate(const struct KbbmState *state,
                                      double t,
                                      const struct KbbmCoefficients *coeffs,
                                      struct KbbmState **out);

/**
 * Integrates with IFRK4 up to `t_final` (a multiple of `dt`), keeping every
 * `stride`-th step. Records carry the H² and G^{0,2} norms and σ̂.
 *
 * # Safety
 * Handles must be live; `out` valid for a pointer write.
 */
enum KbbmStatus kbbm_evolve(const struct KbbmState *state,
                            const struct KbbmCoefficients *coeffs,
                            double t_final,
                            double dt,
                            size_t stride,
                            struct KbbmTrajectory **out);

/**
 * Number of records, or 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or live.
 */
size_t kbbm_trajectory_len(const struct KbbmTrajectory *traj);

/**
 * # Safety
 * `traj` must be live; `out` valid for a write.
 */
enum KbbmStatus kbbm_trajectory_record(const struct KbbmTrajectory *traj,
                                       size_t index,
                                       struct KbbmRecord *out);

/**
 * Copy of the state at record `index`.
 *
 * # Safety
 * `traj` must be live; `out` valid for a pointer write.
 */
enum KbbmStatus kbbm_trajectory_state(const struct KbbmTrajectory *traj,
                                      size_t index,
                                      struct KbbmState **out);

/**
 * # Safety
 * `traj` must be null or a handle from this library, not yet freed.
 */
void kbbm_trajectory_free(struct KbbmTrajectory *traj);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KBBM_H */
