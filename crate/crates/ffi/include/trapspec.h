/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef TRAPSPEC_H
#define TRAPSPEC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every fallible call.
 */
typedef enum TrapspecStatus {
  TRAPSPEC_STATUS_OK = 0,
  /*
   A parameter is out of range.
   */
  TRAPSPEC_STATUS_INVALID_ARGUMENT = 1,
  /*
   A required pointer was null.
   */
  TRAPSPEC_STATUS_NULL_POINTER = 2,
  /*
   An iterative or quadrature scheme failed.
   */
  TRAPSPEC_STATUS_NUMERICAL = 3,
  /*
   The caller's buffer is shorter than the data.
   */
  TRAPSPEC_STATUS_BUFFER_TOO_SMALL = 4,
  /*
   An internal panic was caught.
   */
  TRAPSPEC_STATUS_PANIC = 5,
} TrapspecStatus;

/*
 A sampled or user-supplied energy landscape.
 */
typedef struct TrapspecLandscape TrapspecLandscape;

/*
 Eigenvalues and spectral weights of a landscape's generator.
 */
typedef struct TrapspecSpectrum TrapspecSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *trapspec_version(void);

/*
 Copies the calling thread's last error message into `buf` (truncated and
 NUL-terminated) and returns the full message length excluding the NUL.
 Returns 0 when the last call on this thread succeeded.

 # Safety
 `buf` must be null or valid for writes of `len` bytes.
 */
size_t trapspec_last_error_message(char *buf, size_t len);

/*
 Draws a landscape of `n` sites with exponent `alpha` from `seed`.

 # Safety
 `out` must be valid for a pointer write. The handle stored there must be
 released with [`trapspec_landscape_free`].
 */
enum TrapspecStatus trapspec_landscape_sample(double alpha,
                                              size_t n,
                                              uint64_t seed,
                                              struct TrapspecLandscape **out);

/*
 Builds a landscape from `len` rates in `(0, 1]` (any order).

 # Safety
 `rates` must be valid for reads of `len` doubles and `out` for a pointer
 write. Release the handle with [`trapspec_landscape_free`].
 */
enum TrapspecStatus trapspec_landscape_from_rates(const double *rates,
                                                  size_t len,
                                                  struct TrapspecLandscape **out);

/*
 Number of sites, or 0 for a null handle.

 # Safety
 `landscape` must be null or a live handle.
 */
size_t trapspec_landscape_len(const struct TrapspecLandscape *landscape);

/*
 Copies the rates, sorted increasing, into `out`.

 # Safety
 `landscape` must be a live handle and `out` valid for `len` doubles.
 */
enum TrapspecStatus trapspec_landscape_rates(const struct TrapspecLandscape *landscape,
                                             double *out,
                                             size_t len);

/*
 Releases a landscape. Null is ignored.

 # Safety
 `landscape` must be null or a handle not yet freed.
 */
void trapspec_landscape_free(struct TrapspecLandscape *landscape);

/*
 Computes the spectrum of a landscape with root tolerance `tol`.

 # Safety
 `landscape` must be a live handle and `out` valid for a pointer write.
 Release the result with [`trapspec_spectrum_free`].
 */
enum TrapspecStatus trapspec_spectrum_compute(const struct TrapspecLandscape *landscape,
                                              double tol,
                                              struct TrapspecSpectrum **out);

/*
 Number of eigenvalues, or 0 for a null handle.

 # Safety
 `spectrum` must be null or a live handle.
 */
size_t trapspec_spectrum_len(const struct TrapspecSpectrum *spectrum);

/*
 Copies the eigenvalues, sorted increasing.

 # Safety
 `spectrum` must be a live handle and `out` valid for `len` doubles.
 */
enum TrapspecStatus trapspec_spectrum_eigenvalues(const struct TrapspecSpectrum *spectrum,
                                                  double *out,
                                                  size_t len);

/*
 Copies the spectral weights in eigenvalue order.

 # Safety
 `spectrum` must be a live handle and `out` valid for `len` doubles.
 */
enum TrapspecStatus trapspec_spectrum_weights(const struct TrapspecSpectrum *spectrum,
                                              double *out,
                                              size_t len);

/*
 Releases a spectrum. Null is ignored.

 # Safety
 `spectrum` must be null or a handle not yet freed.
 */
void trapspec_spectrum_free(struct TrapspecSpectrum *spectrum);

/*
 Probability of no jump in `(t_w, t_w + t]` from the uniform start.

 # Safety
 `spectrum` must be a live handle and `out` valid for a write.
 */
enum TrapspecStatus trapspec_pi(const struct TrapspecSpectrum *spectrum,
                                double t,
                                double t_w,
                                double *out);

/*
 Monte Carlo estimate of the same probability with its standard error.

 # Safety
 `landscape` must be a live handle; `estimate` and `stderr` valid for writes.
 */
enum TrapspecStatus trapspec_pi_monte_carlo(const struct TrapspecLandscape *landscape,
                                            double t,
                                            double t_w,
                                            size_t replicas,
                                            uint64_t seed,
                                            double *estimate,
                                            double *stderr);

/*
 Large-system limit of the correlation at ratio `theta = t/t_w`.

 # Safety
 `out` must be valid for a write.
 */
enum TrapspecStatus trapspec_aging_function(double alpha, double theta, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRAPSPEC_H */
