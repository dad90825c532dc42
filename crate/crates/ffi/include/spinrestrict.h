#ifndef SPINRESTRICT_H
#define SPINRESTRICT_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Single-site observable measured on every site.
 */
typedef enum SrObservable {
  SR_OBSERVABLE_SIGMA_X = 0,
  SR_OBSERVABLE_SIGMA_Y = 1,
  SR_OBSERVABLE_SIGMA_Z = 2,
} SrObservable;

typedef enum SrStatus {
  SR_STATUS_OK = 0,
  SR_STATUS_NULL_POINTER = 1,
  SR_STATUS_DOMAIN = 2,
  SR_STATUS_NUMERICAL = 3,
  SR_STATUS_CAPABILITY = 4,
  SR_STATUS_SINGULAR = 5,
  SR_STATUS_BUFFER_TOO_SMALL = 6,
  SR_STATUS_PANIC = 7,
} SrStatus;

/**
 * Finitely correlated state.
 */
typedef struct SrFcsModel SrFcsModel;

/**
 * Gibbs or ground state of a transverse-field Ising chain.
 */
typedef struct SrIsingState SrIsingState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread, NUL-terminated and truncated to fit.
 *
 * Returns the full message length in bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t sr_last_error(char *buf, size_t len);

/**
 * Builds the state of `H = −J Σ σx σx − h Σ σz` on `n` open-chain sites.
 *
 * A positive finite `beta` gives the Gibbs state; `beta = +INFINITY` gives the ground state.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SrStatus sr_ising_state_new(double j,
                                 double h,
                                 size_t n,
                                 double beta,
                                 uint64_t seed,
                                 struct SrIsingState **out);

/**
 * # Safety
 * `state` must come from `sr_ising_state_new` and not be freed twice.
 */
void sr_ising_state_free(struct SrIsingState *state);

/**
 * Writes the number of sites.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SrStatus sr_ising_state_sites(const struct SrIsingState *state, size_t *n);

/**
 * Writes energy, log-partition function and spectral gap; unavailable values are NaN.
 *
 * # Safety
 * `state` must be valid; null out-pointers are skipped.
 */
enum SrStatus sr_ising_state_summary(const struct SrIsingState *state,
                                     double *energy,
                                     double *log_partition,
                                     double *gap);

/**
 * Classical restriction of the state to the whole chain.
 *
 * Probabilities are indexed with the first site most significant and each
 * site's outcome ordered `−1, +1`. `written` receives `2^N`.
 *
 * # Safety
 * `probs` must be valid for `len` writes; `written` may be null.
 */
enum SrStatus sr_ising_state_restriction(const struct SrIsingState *state,
                                         enum SrObservable observable,
                                         double *probs,
                                         size_t len,
                                         size_t *written);

/**
 * Largest `β` for which the convergence condition with parameter `a` holds.
 *
 * # Safety
 * Out-pointers must be valid.
 */
enum SrStatus sr_beta_max(double j, double h, double a, double *beta, bool *unbounded);

/**
 * Limiting cumulant generating function `F(t)` of the ground-state σz restriction at `g = h/J`.
 *
 * # Safety
 * `value` must be valid.
 */
enum SrStatus sr_szego_f(double g, double t, size_t nodes, double *value);

/**
 * `log G_n(t)` from the Toeplitz determinant on `n` sites.
 *
 * # Safety
 * `value` must be valid.
 */
enum SrStatus sr_toeplitz_log_generating(double g, size_t n, double t, size_t nodes, double *value);

/**
 * Rate function `I(m)` and the maximizing tilt.
 *
 * # Safety
 * `value` must be valid; `tilt` may be null.
 */
enum SrStatus sr_rate_function(double g, double m, size_t nodes, double *value, double *tilt);

/**
 * The spin-1 AKLT state.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SrStatus sr_fcs_model_aklt(struct SrFcsModel **out);

/**
 * Parses a model from JSON `{"m": .., "A": [..]}`: `m` row-major 2x2 matrices of `[re, im]` pairs.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum SrStatus sr_fcs_model_from_json(const char *json, struct SrFcsModel **out);

/**
 * # Safety
 * `model` must come from an `sr_fcs_model_*` constructor and not be freed twice.
 */
void sr_fcs_model_free(struct SrFcsModel *model);

/**
 * # Safety
 * Pointers must be valid.
 */
enum SrStatus sr_fcs_model_local_dim(const struct SrFcsModel *model, size_t *m);

/**
 * Eigenvalues of the transfer map as split real and imaginary parts.
 *
 * # Safety
 * `re` and `im` must be valid for `len` writes; `written` may be null.
 */
enum SrStatus sr_fcs_model_transfer_spectrum(const struct SrFcsModel *model,
                                             double *re,
                                             double *im,
                                             size_t len,
                                             size_t *written);

/**
 * Largest conditioned correlation over Gell-Mann pairs after measuring the
 * basis outcomes `x_v` (0-based, `2(n − 1)` entries) on the conditioning sites.
 *
 * # Safety
 * `x_v` must be valid for `x_v_len` reads; `value` must be valid.
 */
enum SrStatus sr_fcs_conditioned_correlation(const struct SrFcsModel *model,
                                             size_t n,
                                             const size_t *x_v,
                                             size_t x_v_len,
                                             double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPINRESTRICT_H */
