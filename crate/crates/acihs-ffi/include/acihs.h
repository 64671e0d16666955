#ifndef ACIHS_H
#define ACIHS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a C ABI call.
 */
typedef enum AcihsStatus {
  /**
   * Success.
   */
  AcihsOk = 0,
  /**
   * A pointer argument was null.
   */
  AcihsNullPointer = 1,
  /**
   * An argument was out of range or inconsistent.
   */
  AcihsInvalidArgument = 2,
  /**
   * The computation failed numerically.
   */
  AcihsNumericalError = 3,
} AcihsStatus;

/**
 * Opaque handle to a confocal quadric family.
 */
typedef struct AcihsFamily AcihsFamily;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create a family from `n` positive semiaxes. On success `*out` owns the
 * handle; release it with `acihs_family_free`.
 *
 * # Safety
 * `axes` must point to `n` readable doubles and `out` must be writable.
 */
enum AcihsStatus acihs_family_new(const double *axes, uintptr_t n, struct AcihsFamily **out);

/**
 * Release a family handle. Null is a no-op.
 *
 * # Safety
 * `fam` must be null or a pointer returned by `acihs_family_new` that has
 * not been freed yet.
 */
void acihs_family_free(struct AcihsFamily *fam);

/**
 * Number of semiaxes of the family.
 *
 * # Safety
 * `fam` must be a live family handle.
 */
uintptr_t acihs_family_dim(const struct AcihsFamily *fam);

/**
 * First integrals of the constrained system at the phase point (x, y);
 * writes `dim` values into `out`.
 *
 * # Safety
 * `x`, `y` and `out` must point to `dim` doubles; `fam` must be live.
 */
enum AcihsStatus acihs_uhlenbeck_integrals(const struct AcihsFamily *fam,
                                           const double *x,
                                           const double *y,
                                           double *out);

/**
 * Tangency spectrum of the line through the phase point (x, y); writes
 * `dim - 1` complex values as interleaved (re, im) pairs into `out`.
 *
 * # Safety
 * `x` and `y` must point to `dim` doubles, `out` to `2 * (dim - 1)` doubles.
 */
enum AcihsStatus acihs_tangency_values(const struct AcihsFamily *fam,
                                       const double *x,
                                       const double *y,
                                       double *out);

/**
 * Integrate the geodesic flow on the ellipsoid from (x0, v0) and report the
 * worst relative drift of the sorted tangency spectrum in `*out_drift`.
 *
 * # Safety
 * `x0` and `v0` must point to `dim` doubles; `out_drift` must be writable.
 */
enum AcihsStatus acihs_geodesic_spectrum_drift(const struct AcihsFamily *fam,
                                               const double *x0,
                                               const double *v0,
                                               double dt,
                                               uintptr_t steps,
                                               double *out_drift);

/**
 * Roots of the polynomial with the given ascending complex coefficients
 * (interleaved re, im). Writes `n_coeffs - 1` interleaved roots.
 *
 * # Safety
 * `coeffs` must point to `2 * n_coeffs` doubles and `out` to
 * `2 * (n_coeffs - 1)` doubles.
 */
enum AcihsStatus acihs_poly_roots(const double *coeffs, uintptr_t n_coeffs, double *out);

/**
 * Genus of the smooth spectral curve of an r-sheeted cover with twist degree
 * `d` over a base of genus `g`.
 */
int64_t acihs_spectral_genus(int64_t r, int64_t d, int64_t g);

/**
 * Splitting type of the direct image of O(d) under an n-sheeted cover;
 * writes `n` integers.
 *
 * # Safety
 * `out` must point to `n` writable 64-bit integers.
 */
enum AcihsStatus acihs_direct_image_splitting(int64_t n, int64_t d, int64_t *out);

/**
 * Run the acceptance suite; returns the number of failed criteria.
 */
uint32_t acihs_selftest(uint64_t seed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACIHS_H */
