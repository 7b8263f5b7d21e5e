#ifndef BEAMSPACE_DENOISER_H
#define BEAMSPACE_DENOISER_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum BsdStatus {
  BSD_STATUS_OK = 0,
  BSD_STATUS_NULL_POINTER = 1,
  BSD_STATUS_INVALID_ARGUMENT = 2,
  BSD_STATUS_NON_FINITE = 3,
  BSD_STATUS_NO_CONVERGENCE = 4,
  BSD_STATUS_INTERNAL = 5,
  BSD_STATUS_PANIC = 6,
} BsdStatus;

/**
 * Fixed-point storage format set.
 */
typedef enum BsdFxFormats {
  /**
   * Power 16/8, SDNR 24/8.
   */
  BSD_FX_FORMATS_DECLARED = 0,
  /**
   * Power 24/16, SDNR 32/16.
   */
  BSD_FX_FORMATS_EXTENDED = 1,
} BsdFxFormats;

/**
 * Opaque denoiser handle.
 */
typedef struct BsdDenoiser BsdDenoiser;

/**
 * Denoiser tuning. `min_retained = 0` selects `max(8, M/8)`.
 */
typedef struct BsdParams {
  double cost_ratio;
  double confidence;
  double confidence_enlarged;
  size_t min_retained;
  size_t iterations;
  bool strict_kappa;
} BsdParams;

/**
 * Estimates from one denoiser run. Thresholds may be `+inf` (everything
 * removed) or `-inf` (everything kept).
 */
typedef struct BsdReport {
  double d0;
  double channel_power;
  double sdnr;
  double activity_rate;
  double eta;
  size_t active_beams;
  size_t support;
  bool activity_degenerate;
  bool known_noise;
  /**
   * Saturation events (fixed point only).
   */
  uint64_t saturations;
} BsdReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Writes the default parameters to `out`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum BsdStatus bsd_params_default(struct BsdParams *out);

/**
 * Creates a denoiser for an ADC with `bits` resolution (0 for none).
 * `params` may be null for defaults. The handle is written to `out` and
 * must be released with [`bsd_denoiser_free`].
 *
 * # Safety
 * `params` must be null or point to a valid `BsdParams`; `out` must be
 * valid for writes.
 */
enum BsdStatus bsd_denoiser_new(uint32_t bits,
                                const struct BsdParams *params,
                                struct BsdDenoiser **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `handle` must be null or come from [`bsd_denoiser_new`] and not be used
 * afterwards.
 */
void bsd_denoiser_free(struct BsdDenoiser *handle);

/**
 * Replaces the parameters of a handle. On error the handle is unchanged.
 *
 * # Safety
 * `handle` and `params` must be valid.
 */
enum BsdStatus bsd_denoiser_set_params(struct BsdDenoiser *handle, const struct BsdParams *params);

/**
 * Reads the current parameters.
 *
 * # Safety
 * `handle` must be valid and `out` valid for writes.
 */
enum BsdStatus bsd_denoiser_params(const struct BsdDenoiser *handle, struct BsdParams *out);

/**
 * Bussgang gain of the handle's ADC model.
 *
 * # Safety
 * `handle` must be valid and `out` valid for writes.
 */
enum BsdStatus bsd_denoiser_alpha(const struct BsdDenoiser *handle, double *out);

/**
 * Denoises `m` antenna samples (`2m` interleaved doubles) into `output`
 * (`2m` doubles, may alias `input`). `known_d0` is the composite noise
 * power, or NaN to estimate it. `report` may be null.
 *
 * # Safety
 * `input` must be readable and `output` writable for `2m` doubles;
 * `report` must be null or valid for writes.
 */
enum BsdStatus bsd_denoise(const struct BsdDenoiser *handle,
                           const double *input,
                           size_t m,
                           double known_d0,
                           double *output,
                           struct BsdReport *report);

/**
 * Bit-accurate fixed-point counterpart of [`bsd_denoise`]. `m` must be a
 * power of two and the confidence scalars powers of two. Reported
 * quantities are rescaled to the input's units.
 *
 * # Safety
 * Same as [`bsd_denoise`].
 */
enum BsdStatus bsd_denoise_fixed(const struct BsdDenoiser *handle,
                                 const double *input,
                                 size_t m,
                                 double known_d0,
                                 enum BsdFxFormats formats,
                                 double *output,
                                 struct BsdReport *report);

/**
 * Message for the last failed call on this thread, empty after success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *bsd_last_error_message(void);

/**
 * Static name of a status code.
 */
const char *bsd_status_name(enum BsdStatus status);

/**
 * Library version string.
 */
const char *bsd_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BEAMSPACE_DENOISER_H */
