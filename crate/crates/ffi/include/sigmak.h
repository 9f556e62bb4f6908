/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef SIGMAK_H
#define SIGMAK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SigmakStatus {
  SIGMAK_STATUS_OK = 0,
  SIGMAK_STATUS_NULL_POINTER = 1,
  SIGMAK_STATUS_DOMAIN = 2,
  SIGMAK_STATUS_SINGULARITY = 3,
  SIGMAK_STATUS_UNDEFINED_CURVATURE = 4,
  SIGMAK_STATUS_INTEGRATION = 5,
  SIGMAK_STATUS_POLE = 6,
  SIGMAK_STATUS_REGION = 7,
  SIGMAK_STATUS_CLASSIFICATION = 8,
  SIGMAK_STATUS_DEGENERATE = 9,
  SIGMAK_STATUS_INAPPLICABLE = 10,
  SIGMAK_STATUS_INDEX_OUT_OF_RANGE = 11,
  SIGMAK_STATUS_PANIC = 12,
} SigmakStatus;

typedef enum SigmakDirection {
  SIGMAK_DIRECTION_FORWARD = 0,
  SIGMAK_DIRECTION_BACKWARD = 1,
} SigmakDirection;

typedef enum SigmakTermination {
  SIGMAK_TERMINATION_S_MAX = 0,
  SIGMAK_TERMINATION_BOX_ESCAPE = 1,
  SIGMAK_TERMINATION_BLOW_UP = 2,
  SIGMAK_TERMINATION_ALPHA_AXIS = 3,
  SIGMAK_TERMINATION_SECTION_LIMIT = 4,
} SigmakTermination;

typedef enum SigmakClassKind {
  SIGMAK_CLASS_KIND_STATIONARY = 0,
  SIGMAK_CLASS_KIND_CONSTANT_K_LINE = 1,
  SIGMAK_CLASS_KIND_PERIODIC = 2,
  SIGMAK_CLASS_KIND_ARC_TO_ALPHA_AXIS = 3,
  SIGMAK_CLASS_KIND_ARC_BI_INFINITE = 4,
  SIGMAK_CLASS_KIND_HOMOCLINIC_TO_ORIGIN = 5,
  SIGMAK_CLASS_KIND_TRUNCATED = 6,
} SigmakClassKind;

/**
 * Opaque parameter handle.
 */
typedef struct SigmakParams SigmakParams;

/**
 * Opaque trace handle.
 */
typedef struct SigmakTrace SigmakTrace;

/**
 * Integrator settings; see [`sigmak_config_default`].
 */
typedef struct SigmakConfig {
  double rel_tol;
  double abs_tol;
  double max_step;
  double s_max;
  double box_bound;
  double blowup_threshold;
  double section_tol;
} SigmakConfig;

/**
 * Critical values; absent roots are NaN.
 */
typedef struct SigmakCriticalValues {
  double k_c1_pos;
  double k_c1_neg;
  double k_c2_pos;
  double k_c2_neg;
} SigmakCriticalValues;

typedef struct SigmakSample {
  double s;
  double alpha;
  double k;
  /**
   * Height of the leaf center, zero at the start.
   */
  double t;
} SigmakSample;

/**
 * Orbit class with its payload. Fields that do not apply to `kind` are NaN.
 *
 * `Stationary` fills `alpha_end` and `k_min = k_max`; `ConstantKLine` fills `k_min = k_max`.
 */
typedef struct SigmakClass {
  enum SigmakClassKind kind;
  double period;
  double k_min;
  double k_max;
  double s_minus;
  double s_plus;
  double alpha_minus;
  double alpha_plus;
  double alpha_end;
} SigmakClass;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *sigmak_last_error(void);

struct SigmakConfig sigmak_config_default(void);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum SigmakStatus sigmak_params_new(uint32_t n, uint32_t i, double c, struct SigmakParams **out);

/**
 * # Safety
 * `params` must come from [`sigmak_params_new`] and not have been freed. Null is ignored.
 */
void sigmak_params_free(struct SigmakParams *params);

/**
 * # Safety
 * `params` must be a live handle; `out` must be valid for writes.
 */
enum SigmakStatus sigmak_l_of_k(const struct SigmakParams *params, double k, double *out);

/**
 * # Safety
 * `params` must be a live handle; the outputs must be valid for writes.
 */
enum SigmakStatus sigmak_vector_field(const struct SigmakParams *params,
                                      double alpha,
                                      double k,
                                      double *out_dk,
                                      double *out_dalpha);

/**
 * # Safety
 * `params` must be a live handle; `out` must be valid for writes.
 */
enum SigmakStatus sigmak_critical_k(const struct SigmakParams *params,
                                    struct SigmakCriticalValues *out);

/**
 * Integrates from `(alpha0, k0)`. A null `cfg` selects the defaults.
 *
 * # Safety
 * `params` must be a live handle, `cfg` null or valid, `out` valid for writes.
 */
enum SigmakStatus sigmak_integrate(const struct SigmakParams *params,
                                   double alpha0,
                                   double k0,
                                   const struct SigmakConfig *cfg,
                                   enum SigmakDirection direction,
                                   struct SigmakTrace **out);

/**
 * Number of samples; 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or a live handle.
 */
size_t sigmak_trace_len(const struct SigmakTrace *trace);

/**
 * # Safety
 * `trace` must be a live handle; `out` must be valid for writes.
 */
enum SigmakStatus sigmak_trace_sample(const struct SigmakTrace *trace,
                                      size_t index,
                                      struct SigmakSample *out);

/**
 * # Safety
 * `trace` must be a live handle; `out` must be valid for writes.
 */
enum SigmakStatus sigmak_trace_termination(const struct SigmakTrace *trace,
                                           enum SigmakTermination *out);

/**
 * # Safety
 * `trace` must come from [`sigmak_integrate`] and not have been freed. Null is ignored.
 */
void sigmak_trace_free(struct SigmakTrace *trace);

/**
 * Classifies the orbit through `(alpha0, k0)`. A null `cfg` selects the defaults.
 * For a `Truncated` result the reason is left in [`sigmak_last_error`].
 *
 * # Safety
 * `params` must be a live handle, `cfg` null or valid, `out` valid for writes.
 */
enum SigmakStatus sigmak_classify(const struct SigmakParams *params,
                                  double alpha0,
                                  double k0,
                                  const struct SigmakConfig *cfg,
                                  struct SigmakClass *out);

/**
 * Pansu sphere profile `f(|z|)` for `0 <= |z| <= 1/lambda`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SigmakStatus sigmak_pansu_profile(double lambda, double z_abs, double *out);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sigmak_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIGMAK_H */
