#ifndef COLORCOUNT_H
#define COLORCOUNT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CcStatus {
  CC_OK = 0,
  /**
   * A required pointer was null.
   */
  CC_ERR_NULL = 1,
  CC_ERR_INVALID_ARGUMENT = 2,
  CC_ERR_UNKNOWN_METHOD = 3,
  CC_ERR_IO = 4,
  /**
   * Unreadable or unsupported image data.
   */
  CC_ERR_DECODE = 5,
  /**
   * Fitting or sampling failed, or the request cannot be satisfied.
   */
  CC_ERR_COMPUTATION = 6,
  CC_ERR_PANIC = 7,
} CcStatus;

typedef struct CcCurve CcCurve;

typedef struct CcEstimate CcEstimate;

typedef struct CcSamples CcSamples;

/**
 * Sweep and count settings. Obtain defaults from [`cc_options_default`].
 */
typedef struct CcOptions {
  size_t k_max;
  uint64_t seed;
  size_t js_samples;
} CcOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *cc_last_error(void);

const char *cc_version(void);

struct CcOptions cc_options_default(void);

/**
 * Decodes a PNG or JPEG file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum CcStatus cc_samples_decode(const char *path, struct CcSamples **out);

/**
 * Wraps `width * height` interleaved 8-bit RGB pixels in row-major order.
 *
 * # Safety
 * `rgb` must point to `3 * width * height` readable bytes.
 */
enum CcStatus cc_samples_from_rgb8(const uint8_t *rgb,
                                   size_t width,
                                   size_t height,
                                   struct CcSamples **out);

/**
 * Renders a synthetic image with the default separation and truncation.
 *
 * # Safety
 * `pattern` must be a NUL-terminated string and `out` a writable pointer.
 */
enum CcStatus cc_synth(const char *pattern,
                       size_t k,
                       size_t width,
                       size_t height,
                       uint64_t seed,
                       double noise_sigma,
                       struct CcSamples **out);

/**
 * # Safety
 * `samples` must be a live handle and `path` a NUL-terminated string.
 */
enum CcStatus cc_samples_write_png(const struct CcSamples *samples, const char *path);

/**
 * Pixel count; 0 for a null handle.
 *
 * # Safety
 * `samples` must be null or a live handle.
 */
size_t cc_samples_len(const struct CcSamples *samples);

/**
 * # Safety
 * `samples` must be null or a live handle.
 */
size_t cc_samples_width(const struct CcSamples *samples);

/**
 * # Safety
 * `samples` must be null or a live handle.
 */
size_t cc_samples_height(const struct CcSamples *samples);

/**
 * # Safety
 * `samples` must be null or a handle not yet freed.
 */
void cc_samples_free(struct CcSamples *samples);

/**
 * Estimates the color count. A null `options` means defaults.
 *
 * # Safety
 * `samples` must be a live handle, `method` a NUL-terminated string,
 * `options` null or valid, `out` a writable pointer.
 */
enum CcStatus cc_count(const struct CcSamples *samples,
                       const char *method,
                       const struct CcOptions *options,
                       struct CcEstimate **out);

/**
 * # Safety
 * `estimate` must be null or a live handle.
 */
size_t cc_estimate_value(const struct CcEstimate *estimate);

/**
 * Score at the selected K; for `cch`, the share of pixels in counted cells.
 *
 * # Safety
 * `estimate` must be null or a live handle.
 */
double cc_estimate_score(const struct CcEstimate *estimate);

/**
 * # Safety
 * `estimate` must be null or a live handle.
 */
double cc_estimate_runtime_seconds(const struct CcEstimate *estimate);

/**
 * # Safety
 * `estimate` must be null or a handle not yet freed.
 */
void cc_estimate_free(struct CcEstimate *estimate);

/**
 * Per-K scores of a sweep method. A null `options` means defaults.
 *
 * # Safety
 * As for [`cc_count`].
 */
enum CcStatus cc_sweep(const struct CcSamples *samples,
                       const char *method,
                       const struct CcOptions *options,
                       struct CcCurve **out);

/**
 * Largest K in the curve; 0 for a null handle.
 *
 * # Safety
 * `curve` must be null or a live handle.
 */
size_t cc_curve_len(const struct CcCurve *curve);

/**
 * Writes the score at `k` (1-based) to `out`.
 *
 * # Safety
 * `curve` must be a live handle and `out` a writable pointer.
 */
enum CcStatus cc_curve_score(const struct CcCurve *curve, size_t k, double *out);

/**
 * K picked from the curve by its method's selection rule; 0 for null.
 *
 * # Safety
 * `curve` must be null or a live handle.
 */
size_t cc_curve_select(const struct CcCurve *curve);

/**
 * # Safety
 * `curve` must be null or a handle not yet freed.
 */
void cc_curve_free(struct CcCurve *curve);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COLORCOUNT_H */
