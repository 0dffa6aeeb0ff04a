#ifndef BIEXCITON_H
#define BIEXCITON_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Zero is success.
 */
typedef enum BxStatus {
  BX_STATUS_OK = 0,
  BX_STATUS_NULL_POINTER = 1,
  BX_STATUS_PARAMETER = 2,
  BX_STATUS_EXISTENCE = 3,
  BX_STATUS_NUMERICAL = 4,
  BX_STATUS_DOMAIN = 5,
  BX_STATUS_REGIME = 6,
  BX_STATUS_POLE = 7,
  BX_STATUS_RANGE = 8,
  BX_STATUS_TIMING = 9,
  BX_STATUS_BUFFER_TOO_SMALL = 10,
  BX_STATUS_PANIC = 11,
} BxStatus;

/**
 * Projected biexciton Hamiltonian with its eigendecomposition.
 */
typedef struct BxProjected BxProjected;

/**
 * A wavepacket run ready to be sampled at any time.
 */
typedef struct BxWavepacket BxWavepacket;

/**
 * Gaussian packet settings. A NaN `r_offset` places the packet so that it
 * reaches the impurity at t = 0.
 */
typedef struct BxWavepacketConfig {
  double k0;
  double dk0;
  double t_start;
  double t_end;
  double sample_dt;
  double r_offset;
} BxWavepacketConfig;

/**
 * Model parameters. `n` must be even and at least 4.
 */
typedef struct BxModelParams {
  size_t n;
  double j;
  double d;
  double e0;
  double v0;
} BxModelParams;

typedef struct BxPole {
  /**
   * 0 or π/2.
   */
  double k_prime;
  double k_doubleprime;
  double energy;
  double residual;
} BxPole;

typedef struct BxBic {
  size_t index;
  double energy;
  double closed_form;
  double discrepancy;
  double schmidt_number;
} BxBic;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL terminated)
 * and returns the full message length without the terminator. Passing a
 * null `buf` or `len` 0 only queries the length.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t bx_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bx_version(void);

/**
 * The canonical packet: K0 = 3π/8, ΔK0 = π/24, t from −30 to 70.
 */
struct BxWavepacketConfig bx_wavepacket_config_canonical(void);

/**
 * Energy of the single-exciton bound state on the N-site ring.
 *
 * # Safety
 * `p` and `energy` must be valid pointers.
 */
enum BxStatus bx_exciton_bound_energy(const struct BxModelParams *p, double *energy);

/**
 * Builds and diagonalizes the projected Hamiltonian.
 *
 * # Safety
 * `p` must be valid; `out` receives a handle owned by the caller.
 */
enum BxStatus bx_projected_new(const struct BxModelParams *p, struct BxProjected **out);

/**
 * # Safety
 * `h` must come from [`bx_projected_new`] and not be used afterwards.
 */
void bx_projected_free(struct BxProjected *h);

/**
 * Number of eigenvalues (N).
 *
 * # Safety
 * `h` must be a live handle or null.
 */
size_t bx_projected_len(const struct BxProjected *h);

/**
 * Copies the ascending eigenvalues into `out`, which holds `len` doubles.
 *
 * # Safety
 * `h` must be a live handle; `out` valid for `len` writes.
 */
enum BxStatus bx_projected_eigenvalues(const struct BxProjected *h, double *out, size_t len);

/**
 * Number of impurity bound states among the eigenstates.
 *
 * # Safety
 * `h` must be a live handle; `count` valid for one write.
 */
enum BxStatus bx_projected_bound_count(const struct BxProjected *h, size_t *count);

/**
 * Pole of the biexciton reflection amplitude on the branch fixed by sgn(D V0).
 *
 * # Safety
 * `p` and `out` must be valid pointers.
 */
enum BxStatus bx_find_pole(const struct BxModelParams *p, struct BxPole *out);

/**
 * Full diagonalization and the bound state in the continuum nearest the
 * closed-form energy.
 *
 * # Safety
 * `p` and `out` must be valid pointers.
 */
enum BxStatus bx_find_bic(const struct BxModelParams *p, struct BxBic *out);

/**
 * Impurity strength that reflects `target` of the packet at `t_measure`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum BxStatus bx_calibrate_v0(const struct BxModelParams *p,
                              const struct BxWavepacketConfig *c,
                              double target,
                              double t_measure,
                              double *v0);

/**
 * Prepares a wavepacket run.
 *
 * # Safety
 * `p` and `c` must be valid; `out` receives a handle owned by the caller.
 */
enum BxStatus bx_wavepacket_new(const struct BxModelParams *p,
                                const struct BxWavepacketConfig *c,
                                struct BxWavepacket **out);

/**
 * # Safety
 * `h` must come from [`bx_wavepacket_new`] and not be used afterwards.
 */
void bx_wavepacket_free(struct BxWavepacket *h);

/**
 * Entanglement entropy (bits) between CM and relative coordinates at `t`.
 *
 * # Safety
 * `h` must be a live handle; `s` valid for one write.
 */
enum BxStatus bx_wavepacket_entropy(const struct BxWavepacket *h, double t, double *s);

/**
 * ⟨E⟩ − 2E0 of the packet at `t`.
 *
 * # Safety
 * `h` must be a live handle; `e` valid for one write.
 */
enum BxStatus bx_wavepacket_energy(const struct BxWavepacket *h, double t, double *e);

/**
 * Reflected and transmitted probabilities at `t`.
 *
 * # Safety
 * `h` must be a live handle; `reflected` and `transmitted` valid for one write.
 */
enum BxStatus bx_wavepacket_split(const struct BxWavepacket *h,
                                  double t,
                                  double *reflected,
                                  double *transmitted);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BIEXCITON_H */
