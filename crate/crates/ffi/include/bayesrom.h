#ifndef BAYESROM_H
#define BAYESROM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BromStatus {
  BROM_STATUS_OK = 0,
  BROM_STATUS_NULL_POINTER = 1,
  BROM_STATUS_INVALID_ARGUMENT = 2,
  BROM_STATUS_DIMENSION_MISMATCH = 3,
  BROM_STATUS_RANK_DEFICIENT = 4,
  BROM_STATUS_NUMERICAL_DEGENERACY = 5,
  BROM_STATUS_IO = 6,
  BROM_STATUS_FORMAT = 7,
  BROM_STATUS_PANIC = 8,
  BROM_STATUS_OTHER = 9,
} BromStatus;

/*
 Gaussian posterior over operator rows.
 */
typedef struct BromPosterior BromPosterior;

/*
 Full-order polynomial affine system.
 */
typedef struct BromSystem BromSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty after a success.
 The pointer stays valid until the next call on the same thread.
 */
const char *brom_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *brom_version(void);

/*
 Diffusion-reaction model on `n` nodes of `[0, length]`; parameters `(κ, ρ)`.

 # Safety
 `out` must be a valid pointer to writable storage for one handle.
 */
enum BromStatus brom_system_heat_new(size_t n, double length, struct BromSystem **out);

/*
 Two-dimensional Burgers model with `n_side` interior points per direction;
 parameter `ν`.

 # Safety
 `out` must be a valid pointer to writable storage for one handle.
 */
enum BromStatus brom_system_burgers_new(size_t n_side, struct BromSystem **out);

/*
 # Safety
 `system` must come from a `brom_system_*_new` call and not be used afterwards.
 */
void brom_system_free(struct BromSystem *system);

/*
 # Safety
 `system` must be a live handle and `out` writable.
 */
enum BromStatus brom_system_dims(const struct BromSystem *system,
                                 size_t *state_dim,
                                 size_t *param_dim);

/*
 Copies the initial state into `out` (length `state_dim`).

 # Safety
 `system` must be a live handle; `out` must hold `len` doubles.
 */
enum BromStatus brom_system_initial_state(const struct BromSystem *system, double *out, size_t len);

/*
 Evaluates `f(q; ξ)` into `out`.

 # Safety
 Pointers must reference arrays of the stated lengths.
 */
enum BromStatus brom_system_rhs(const struct BromSystem *system,
                                const double *xi,
                                size_t xi_len,
                                const double *q,
                                size_t n,
                                double *out);

/*
 Integrates with RK4 from `q0` and writes the `n_t` sampled states
 time-major into `out` (`n_t × n`). `*stable` is 0 when the norm exceeded
 `guard_bound`; samples after the blowup are left untouched.

 # Safety
 Pointers must reference arrays of the stated lengths.
 */
enum BromStatus brom_system_integrate(const struct BromSystem *system,
                                      const double *xi,
                                      size_t xi_len,
                                      const double *q0,
                                      size_t n,
                                      double t0,
                                      double tf,
                                      size_t n_t,
                                      size_t substeps,
                                      double guard_bound,
                                      double *out,
                                      size_t out_len,
                                      int32_t *stable);

/*
 Solves the regularized regression for data `D` (`n × d`), targets `Z`
 (`n × r`), and regularizer diagonal `gamma` (length `d`).

 # Safety
 Pointers must reference arrays of the stated lengths; `out` writable.
 */
enum BromStatus brom_posterior_solve(const double *data,
                                     size_t n,
                                     size_t d,
                                     const double *targets,
                                     size_t r,
                                     const double *gamma,
                                     struct BromPosterior **out);

/*
 # Safety
 `posterior` must come from `brom_posterior_solve` and not be used afterwards.
 */
void brom_posterior_free(struct BromPosterior *posterior);

/*
 # Safety
 `posterior` must be a live handle; outputs writable.
 */
enum BromStatus brom_posterior_dims(const struct BromPosterior *posterior, size_t *r, size_t *d);

/*
 Posterior mean operator matrix, row-major `r × d`.

 # Safety
 `out` must hold `len` doubles.
 */
enum BromStatus brom_posterior_mean(const struct BromPosterior *posterior, double *out, size_t len);

/*
 Noise variances `σ_k²`, length `r`.

 # Safety
 `out` must hold `len` doubles.
 */
enum BromStatus brom_posterior_noise_variance(const struct BromPosterior *posterior,
                                              double *out,
                                              size_t len);

/*
 Covariance `Σ_k`, row-major `d × d`.

 # Safety
 `out` must hold `len` doubles.
 */
enum BromStatus brom_posterior_covariance(const struct BromPosterior *posterior,
                                          size_t k,
                                          double *out,
                                          size_t len);

/*
 Draws `n_draws` operator matrices, each row-major `r × d`, stored
 consecutively in `out`.

 # Safety
 `out` must hold `len` doubles.
 */
enum BromStatus brom_posterior_sample(const struct BromPosterior *posterior,
                                      size_t n_draws,
                                      uint64_t seed,
                                      double *out,
                                      size_t len);

/*
 Selects the next training candidate. `omega[i]` is NaN when absent.
 `indices` holds the candidate index of each score.

 # Safety
 Arrays must hold `n` entries; `out` writable.
 */
enum BromStatus brom_next_sample(const size_t *indices,
                                 const double *alpha,
                                 const double *omega,
                                 size_t n,
                                 uint64_t seed,
                                 size_t *out);

/*
 Writes a row-major `rows × cols` matrix in the PROMDAT1 format.

 # Safety
 `path` must be a NUL-terminated string; `data` must hold `rows*cols` doubles.
 */
enum BromStatus brom_matrix_write(const char *path, const double *data, size_t rows, size_t cols);

/*
 Reads the shape of a PROMDAT1 file.

 # Safety
 `path` must be a NUL-terminated string; outputs writable.
 */
enum BromStatus brom_matrix_read_dims(const char *path, size_t *rows, size_t *cols);

/*
 Reads a PROMDAT1 file row-major into `out`.

 # Safety
 `path` must be a NUL-terminated string; `out` must hold `len` doubles.
 */
enum BromStatus brom_matrix_read(const char *path, double *out, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BAYESROM_H */
