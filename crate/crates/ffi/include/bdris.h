#ifndef BDRIS_H
#define BDRIS_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BdrisStatus {
  BDRIS_STATUS_OK = 0,
  BDRIS_STATUS_NULL_POINTER = 1,
  BDRIS_STATUS_INVALID_ARGUMENT = 2,
  BDRIS_STATUS_DIMENSION_MISMATCH = 3,
  BDRIS_STATUS_NOT_ORTHOGONAL = 4,
  /**
   * Power iteration failed or a segment was degenerate.
   */
  BDRIS_STATUS_NUMERICAL = 5,
  BDRIS_STATUS_IO = 6,
  BDRIS_STATUS_PANIC = 7,
  BDRIS_STATUS_INTERNAL = 8,
} BdrisStatus;

enum BdrisImpairmentKind
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  BDRIS_IMPAIRMENT_KIND_IDEAL = 0,
  BDRIS_IMPAIRMENT_KIND_TYPE1 = 1,
  BDRIS_IMPAIRMENT_KIND_TYPE2 = 2,
  BDRIS_IMPAIRMENT_KIND_TYPE3 = 3,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum BdrisImpairmentKind BdrisImpairmentKind;
#else
typedef uint32_t BdrisImpairmentKind;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

enum BdrisNoiseMode
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  BDRIS_NOISE_MODE_SNR_NORMALIZED = 0,
  BDRIS_NOISE_MODE_FIXED_SIGMA = 1,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum BdrisNoiseMode BdrisNoiseMode;
#else
typedef uint32_t BdrisNoiseMode;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

typedef struct BdrisConfig BdrisConfig;

typedef struct BdrisDesign BdrisDesign;

typedef struct BdrisSweep BdrisSweep;

/**
 * Sweep axes. Array fields point to `*_len` elements; kinds use the
 * `BdrisImpairmentKind` values, `noise_mode` a `BdrisNoiseMode` value.
 */
typedef struct BdrisSweepSpec {
  size_t m_t;
  size_t m_r;
  size_t n;
  const size_t *nbars;
  size_t nbars_len;
  const uint32_t *kinds;
  size_t kinds_len;
  const double *snrs_db;
  size_t snrs_len;
  const double *fractions;
  size_t fractions_len;
  size_t trials;
  uint64_t master_seed;
  uint32_t noise_mode;
  double amp_min;
} BdrisSweepSpec;

/**
 * One aggregated sweep point; mirrors a CSV row.
 */
typedef struct BdrisSweepRecord {
  uint32_t impairment_type;
  size_t nbar;
  size_t q;
  size_t n;
  size_t m_t;
  size_t m_r;
  size_t t_pilots;
  double snr_db;
  double fraction;
  size_t max_affected;
  size_t affected_count;
  size_t trials;
  double nmse_mean;
  double nmse_median;
  double nmse_std;
  uint32_t noise_mode;
  uint64_t master_seed;
} BdrisSweepRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *bdris_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bdris_version(void);

/**
 * Creates a configuration with the minimum pilot length, snr-normalized
 * noise and seed 42.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum BdrisStatus bdris_config_new(size_t m_t,
                                  size_t m_r,
                                  size_t n,
                                  size_t nbar,
                                  struct BdrisConfig **out);

/**
 * # Safety
 * `cfg` must be a live handle from `bdris_config_new`.
 */
enum BdrisStatus bdris_config_set_seed(struct BdrisConfig *cfg, uint64_t seed);

/**
 * # Safety
 * `cfg` must be a live handle from `bdris_config_new`.
 */
enum BdrisStatus bdris_config_set_noise_mode(struct BdrisConfig *cfg, uint32_t mode);

/**
 * Pilot length `T` and group count `Q`.
 *
 * # Safety
 * `cfg` must be a live handle; `t` and `q` must be valid for writes.
 */
enum BdrisStatus bdris_config_dims(const struct BdrisConfig *cfg, size_t *t, size_t *q);

/**
 * # Safety
 * `cfg` must be null or a handle from `bdris_config_new` not yet freed.
 */
void bdris_config_free(struct BdrisConfig *cfg);

/**
 * Largest number of impedances `kind` can distort under `cfg`.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be valid for writes.
 */
enum BdrisStatus bdris_max_affected(const struct BdrisConfig *cfg, uint32_t kind, size_t *out);

/**
 * Builds the orthogonal training design for `cfg`.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be valid for writes.
 */
enum BdrisStatus bdris_design_build(const struct BdrisConfig *cfg, struct BdrisDesign **out);

/**
 * Relative orthogonality residual of the design.
 *
 * # Safety
 * `design` must be a live handle; `out` must be valid for writes.
 */
enum BdrisStatus bdris_design_residual(const struct BdrisDesign *design, double *out);

/**
 * # Safety
 * `design` must be null or a handle from `bdris_design_build` not yet freed.
 */
void bdris_design_free(struct BdrisDesign *design);

/**
 * Runs one seeded trial and writes its NMSE. Pass `INFINITY` as `snr_db`
 * for a noiseless trial.
 *
 * # Safety
 * `cfg` and `design` must be live handles, the design built from a
 * configuration with the same dimensions; `nmse` must be valid for writes.
 */
enum BdrisStatus bdris_run_trial(const struct BdrisConfig *cfg,
                                 const struct BdrisDesign *design,
                                 uint32_t kind,
                                 double fraction,
                                 double snr_db,
                                 uint64_t trial_index,
                                 double *nmse);

/**
 * Runs a full sweep on `workers` threads (0 or 1 runs inline).
 *
 * # Safety
 * `spec` must point to a valid spec whose arrays hold the stated lengths;
 * `out` must be valid for writes.
 */
enum BdrisStatus bdris_sweep_run(const struct BdrisSweepSpec *spec,
                                 size_t workers,
                                 struct BdrisSweep **out);

/**
 * Runs a named preset (`fig3` … `fig7`). `trials` of 0 keeps the preset's
 * trial count.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum BdrisStatus bdris_sweep_preset(const char *name,
                                    size_t trials,
                                    size_t workers,
                                    struct BdrisSweep **out);

/**
 * Number of records in a sweep result; 0 for a null handle.
 *
 * # Safety
 * `sweep` must be null or a live handle.
 */
size_t bdris_sweep_len(const struct BdrisSweep *sweep);

/**
 * # Safety
 * `sweep` must be a live handle; `out` must be valid for writes.
 */
enum BdrisStatus bdris_sweep_get(const struct BdrisSweep *sweep,
                                 size_t index,
                                 struct BdrisSweepRecord *out);

/**
 * Writes the sweep as CSV in the same format as the command-line tool.
 *
 * # Safety
 * `sweep` must be a live handle; `path` a NUL-terminated string.
 */
enum BdrisStatus bdris_sweep_write_csv(const struct BdrisSweep *sweep, const char *path);

/**
 * # Safety
 * `sweep` must be null or a handle from a sweep function not yet freed.
 */
void bdris_sweep_free(struct BdrisSweep *sweep);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BDRIS_H */
