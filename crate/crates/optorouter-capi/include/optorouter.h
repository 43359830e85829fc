#ifndef OPTOROUTER_H
#define OPTOROUTER_H

/* Generated by cbindgen from optorouter-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code for every fallible call.
 */
typedef enum {
  /**
   * Success.
   */
  OPTO_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  OPTO_STATUS_NULL_ARGUMENT = 1,
  /**
   * An argument was malformed (non-UTF-8 path, bad grid, negative
   * temperature, undersized buffer, out-of-range index).
   */
  OPTO_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The config file could not be read, parsed, or validated.
   */
  OPTO_STATUS_CONFIG = 3,
  /**
   * The solver failed (no stable branch, degenerate stiffness, singular
   * response).
   */
  OPTO_STATUS_PHYSICS = 4,
  /**
   * Channel detection failed (featureless spectrum, grid too coarse or
   * too narrow).
   */
  OPTO_STATUS_ROUTING = 5,
  /**
   * An internal panic was caught at the boundary; the library state is
   * still usable but the result is lost.
   */
  OPTO_STATUS_PANIC = 6,
} OptoStatus;

/**
 * Response evaluation mode.
 */
typedef enum {
  /**
   * Ground-truth dense linear solve per frequency (default).
   */
  OPTO_MODE_ORACLE = 0,
  /**
   * Independently derived closed form.
   */
  OPTO_MODE_REDERIVED = 1,
  /**
   * Closed form transcribed verbatim from the published expressions.
   */
  OPTO_MODE_PAPER_VERBATIM = 2,
} OptoMode;

/**
 * Which port a detected channel feeds.
 */
typedef enum {
  /**
   * Transmission through the cavity to the right port.
   */
  OPTO_CHANNEL_KIND_TRANSMIT_RIGHT = 0,
  /**
   * Reflection to the left port, lower sideband of the split pair.
   */
  OPTO_CHANNEL_KIND_REFLECT_LEFT_LOWER = 1,
  /**
   * Reflection to the left port, upper sideband.
   */
  OPTO_CHANNEL_KIND_REFLECT_LEFT_UPPER = 2,
} OptoChannelKind;

/**
 * Opaque parameter-set handle (validated SI parameters).
 */
typedef struct OptoParams OptoParams;

/**
 * Opaque routing-report handle (detected channels and the splitting).
 */
typedef struct OptoRouting OptoRouting;

/**
 * Opaque spectrum handle (probabilities and noise on a frequency grid).
 */
typedef struct OptoSpectrum OptoSpectrum;

/**
 * Opaque steady-state handle (one operating point).
 */
typedef struct OptoSteadyState OptoSteadyState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *opto_version(void);

/**
 * Message from the calling thread's most recent failure, or null if the
 * thread has never failed. The pointer stays valid until this thread's next
 * failing call.
 */
const char *opto_last_error(void);

/**
 * Load and validate a parameter set from a `key = value` config file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a writable pointer.
 */
OptoStatus opto_params_load(const char *path, OptoParams **out);

/**
 * Parse and validate a parameter set from config text held in memory.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a writable pointer.
 */
OptoStatus opto_params_parse(const char *text, OptoParams **out);

/**
 * Deep-copy a parameter set (cheap; use before mutating for a sweep).
 *
 * # Safety
 * `params` must be a live handle and `out` a writable pointer.
 */
OptoStatus opto_params_clone(const OptoParams *params, OptoParams **out);

/**
 * Overwrite the Coulomb coupling strength lambda (rad/s per m^2).
 *
 * # Safety
 * `params` must be a live handle.
 */
OptoStatus opto_params_set_coulomb_lambda(OptoParams *params, double lambda);

/**
 * Overwrite the bath temperature (K, non-negative).
 *
 * # Safety
 * `params` must be a live handle.
 */
OptoStatus opto_params_set_temperature(OptoParams *params, double kelvin);

/**
 * Middle-mirror angular frequency omega1 (rad/s); NaN on a null handle.
 *
 * # Safety
 * `params` must be a live handle or null.
 */
double opto_params_omega1(const OptoParams *params);

/**
 * Release a parameter handle. Null is a no-op.
 *
 * # Safety
 * `params` must be a handle from this library, not yet freed.
 */
void opto_params_free(OptoParams *params);

/**
 * Solve for the operating steady state of the driven cavity.
 *
 * # Safety
 * `params` must be a live handle and `out` a writable pointer.
 */
OptoStatus opto_solve(const OptoParams *params, OptoSteadyState **out);

/**
 * Effective cavity detuning Delta (rad/s); NaN on null.
 *
 * # Safety
 * `ss` must be a live handle or null.
 */
double opto_steady_state_detuning(const OptoSteadyState *ss);

/**
 * Bare pump-cavity detuning Delta_c (rad/s); NaN on null.
 *
 * # Safety
 * `ss` must be a live handle or null.
 */
double opto_steady_state_bare_detuning(const OptoSteadyState *ss);

/**
 * Mean intracavity photon number; NaN on null.
 *
 * # Safety
 * `ss` must be a live handle or null.
 */
double opto_steady_state_photon_number(const OptoSteadyState *ss);

/**
 * Static radiation-pressure displacement of the middle mirror (m); NaN on
 * null.
 *
 * # Safety
 * `ss` must be a live handle or null.
 */
double opto_steady_state_mirror_shift(const OptoSteadyState *ss);

/**
 * Static displacement of the external resonator (m); NaN on null.
 *
 * # Safety
 * `ss` must be a live handle or null.
 */
double opto_steady_state_resonator_shift(const OptoSteadyState *ss);

/**
 * Release a steady-state handle. Null is a no-op.
 *
 * # Safety
 * `ss` must be a handle from this library, not yet freed.
 */
void opto_steady_state_free(OptoSteadyState *ss);

/**
 * Compute reflection/transmission probabilities and noise spectra on a
 * uniform grid of `points` frequencies over `[omega_min, omega_max]` rad/s.
 * Pass `omega_min = omega_max = 0` for the default window (±10% around
 * omega1) and `points = 0` for the default resolution. Thermal terms use
 * the temperature stored in `params`.
 *
 * # Safety
 * `params` and `ss` must be live handles and `out` a writable pointer.
 */
OptoStatus opto_spectrum_compute(const OptoParams *params,
                                 const OptoSteadyState *ss,
                                 double omega_min,
                                 double omega_max,
                                 uintptr_t points,
                                 OptoMode mode,
                                 OptoSpectrum **out);

/**
 * Number of grid points in a spectrum; 0 on null.
 *
 * # Safety
 * `spectrum` must be a live handle or null.
 */
uintptr_t opto_spectrum_len(const OptoSpectrum *spectrum);

/**
 * Copy spectrum columns into caller-owned arrays of capacity `capacity`
 * (must be at least `opto_spectrum_len`). Any column pointer may be null to
 * skip that column.
 *
 * # Safety
 * `spectrum` must be a live handle; every non-null column pointer must
 * reference at least `capacity` writable doubles.
 */
OptoStatus opto_spectrum_fill(const OptoSpectrum *spectrum,
                              double *omega,
                              double *reflection,
                              double *transmission,
                              double *vacuum_noise,
                              double *mirror_thermal,
                              double *resonator_thermal,
                              uintptr_t capacity);

/**
 * Release a spectrum handle. Null is a no-op.
 *
 * # Safety
 * `spectrum` must be a handle from this library, not yet freed.
 */
void opto_spectrum_free(OptoSpectrum *spectrum);

/**
 * Detect routing channels on a computed spectrum.
 *
 * # Safety
 * `spectrum`, `params`, and `ss` must be live handles and `out` a writable
 * pointer.
 */
OptoStatus opto_route(const OptoSpectrum *spectrum,
                      const OptoParams *params,
                      const OptoSteadyState *ss,
                      OptoRouting **out);

/**
 * Number of detected channels; 0 on null.
 *
 * # Safety
 * `routing` must be a live handle or null.
 */
uintptr_t opto_routing_channel_count(const OptoRouting *routing);

/**
 * Read one detected channel (channels are sorted by center frequency). Out
 * pointers may be null to skip fields.
 *
 * # Safety
 * `routing` must be a live handle; non-null out pointers must be writable.
 */
OptoStatus opto_routing_channel(const OptoRouting *routing,
                                uintptr_t index,
                                OptoChannelKind *kind,
                                double *center,
                                double *probability,
                                double *width);

/**
 * Half-separation omega0 of the reflected pair (rad/s); NaN when the report
 * has no split pair or the handle is null.
 *
 * # Safety
 * `routing` must be a live handle or null.
 */
double opto_routing_omega0(const OptoRouting *routing);

/**
 * Largest total noise density found on the grid; NaN on null.
 *
 * # Safety
 * `routing` must be a live handle or null.
 */
double opto_routing_noise_floor(const OptoRouting *routing);

/**
 * Release a routing handle. Null is a no-op.
 *
 * # Safety
 * `routing` must be a handle from this library, not yet freed.
 */
void opto_routing_free(OptoRouting *routing);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPTOROUTER_H */
