#ifndef PANO_DEPTH_H
#define PANO_DEPTH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Loss selector for [`pd_loss`].
 */
typedef enum PdLossKind {
  PD_LOSS_KIND_L1 = 0,
  PD_LOSS_KIND_LOG = 1,
  PD_LOSS_KIND_BERHU = 2,
  PD_LOSS_KIND_GRAD = 3,
  PD_LOSS_KIND_COSINE = 4,
  PD_LOSS_KIND_VNL = 5,
  PD_LOSS_KIND_COMB = 6,
  PD_LOSS_KIND_COMB_VNL = 7,
  PD_LOSS_KIND_L1_VNL = 8,
} PdLossKind;

typedef enum PdStatus {
  PD_STATUS_OK = 0,
  PD_STATUS_NULL_POINTER = 1,
  PD_STATUS_INVALID_ARGUMENT = 2,
  PD_STATUS_DIMENSION_MISMATCH = 3,
  PD_STATUS_EMPTY_MASK = 4,
  PD_STATUS_NON_FINITE = 5,
  PD_STATUS_IO = 6,
  PD_STATUS_DECODE = 7,
  PD_STATUS_MISALIGNED = 8,
  PD_STATUS_SAMPLING_EXHAUSTED = 9,
  PD_STATUS_MISSING_COLUMN = 10,
  PD_STATUS_PANIC = 11,
} PdStatus;

/**
 * Depth map with validity mask.
 */
typedef struct PdDepth PdDepth;

/**
 * Subdivided icosahedron.
 */
typedef struct PdIcosphere PdIcosphere;

typedef struct PdDirectErrors {
  double rmse;
  double rmsle;
  double abs_rel;
  double sq_rel;
} PdDirectErrors;

/**
 * Entries of the three-element arrays correspond to the 0.25, 0.5 and
 * 1.0 gradient thresholds.
 */
typedef struct PdBoundaryReport {
  double dbe_acc;
  double dbe_comp;
  double precision[3];
  double recall[3];
  double f1[3];
} PdBoundaryReport;

/**
 * Options for [`pd_evaluate_manifests`]; start from
 * [`pd_eval_options_default`].
 */
typedef struct PdEvalOptions {
  double max_depth;
  /**
   * Non-zero adds solid-angle weighted metrics.
   */
  int32_t spherical_weights;
  /**
   * Negative disables icosphere sampling.
   */
  int32_t ico_order;
  /**
   * Non-zero enables point-cloud and mesh metrics.
   */
  int32_t geometric;
  uint64_t m2m_samples;
  uint64_t seed;
  /**
   * Non-zero averages per-sample metrics instead of pooling pixels.
   */
  int32_t per_sample_mean;
  /**
   * 0 uses one thread per core.
   */
  uint32_t jobs;
} PdEvalOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length without the
 * terminator. Returns 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t pd_last_error_message(char *buf, size_t len);

/**
 * Wraps ground-truth style depth: pixels are valid where the depth is
 * finite and in `(0, max_depth]`, and additionally where `mask` is non-zero
 * when a mask is supplied.
 *
 * # Safety
 * `depth` must hold `width * height` values, `mask` must be null or hold as
 * many bytes, and `out` must be writable.
 */
enum PdStatus pd_depth_new(const double *depth,
                           const uint8_t *mask,
                           size_t width,
                           size_t height,
                           double max_depth,
                           struct PdDepth **out);

/**
 * Wraps raw network output: finite values are clamped into
 * `[0.001, max_depth]`, non-finite ones are invalid.
 *
 * # Safety
 * `depth` must hold `width * height` values and `out` must be writable.
 */
enum PdStatus pd_depth_from_prediction(const double *depth,
                                       size_t width,
                                       size_t height,
                                       double max_depth,
                                       struct PdDepth **out);

/**
 * Loads a PFM depth file; values outside `(0, max_depth]` are invalid.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum PdStatus pd_depth_load(const char *path, double max_depth, struct PdDepth **out);

/**
 * # Safety
 * `d` must be null or a handle from this library, not yet freed.
 */
void pd_depth_free(struct PdDepth *d);

/**
 * # Safety
 * `d` must be a live handle; `width` and `height` writable.
 */
enum PdStatus pd_depth_dims(const struct PdDepth *d, size_t *width, size_t *height);

/**
 * Copies depth values and the mask (1 valid, 0 invalid). Either output may
 * be null; each must otherwise hold `width * height` elements.
 *
 * # Safety
 * See above; `d` must be a live handle.
 */
enum PdStatus pd_depth_copy(const struct PdDepth *d, double *depth, uint8_t *mask);

/**
 * RMSE, RMSLE, AbsRel and SqRel over the joint mask, optionally weighted by
 * pixel solid angle.
 *
 * # Safety
 * `pred` and `gt` must be live handles; `out` writable.
 */
enum PdStatus pd_direct_errors(const struct PdDepth *pred,
                               const struct PdDepth *gt,
                               int32_t spherical,
                               struct PdDirectErrors *out);

/**
 * Fraction of jointly valid pixels with `max(p/g, g/p) < threshold`.
 *
 * # Safety
 * `pred` and `gt` must be live handles; `out` writable.
 */
enum PdStatus pd_delta_accuracy(const struct PdDepth *pred,
                                const struct PdDepth *gt,
                                double threshold,
                                int32_t spherical,
                                double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum PdStatus pd_icosphere_new(uint32_t order, struct PdIcosphere **out);

/**
 * # Safety
 * `s` must be null or a live handle.
 */
void pd_icosphere_free(struct PdIcosphere *s);

/**
 * Number of vertices, 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live handle.
 */
size_t pd_icosphere_vertex_count(const struct PdIcosphere *s);

/**
 * Writes `x y z` triples of unit vertices; `xyz` must hold `3 * count`.
 *
 * # Safety
 * `s` must be a live handle and `xyz` valid for `capacity` doubles.
 */
enum PdStatus pd_icosphere_vertices(const struct PdIcosphere *s, double *xyz, size_t capacity);

/**
 * `δ` accuracy evaluated only at the pixels under the icosphere vertices.
 *
 * # Safety
 * All handles must be live; `out` writable.
 */
enum PdStatus pd_ico_delta_accuracy(const struct PdDepth *pred,
                                    const struct PdDepth *gt,
                                    const struct PdIcosphere *sphere,
                                    double threshold,
                                    double *out);

/**
 * Depth boundary errors and edge precision/recall with default detector
 * parameters and the given maximum depth.
 *
 * # Safety
 * `pred` and `gt` must be live handles; `out` writable.
 */
enum PdStatus pd_boundary_metrics(const struct PdDepth *pred,
                                  const struct PdDepth *gt,
                                  double max_depth,
                                  struct PdBoundaryReport *out);

/**
 * Loss value and, when `gradient` is non-null, its gradient with respect to
 * `pred` (`width * height` doubles). Pixels with a zero `mask` byte are
 * ignored. `seed` drives virtual-normal triplet sampling.
 *
 * # Safety
 * Arrays must hold `width * height` elements; `value` must be writable.
 */
enum PdStatus pd_loss(enum PdLossKind kind,
                      const double *pred,
                      const double *gt,
                      const uint8_t *mask,
                      size_t width,
                      size_t height,
                      uint64_t seed,
                      double *value,
                      double *gradient);

/**
 * Resamples `depth` at `(φ + dphi, θ + dtheta)` per pixel (radians), with
 * longitude wrapping and latitude clamping.
 *
 * # Safety
 * `depth` must be a live handle, `dphi`/`dtheta` must hold one value per
 * pixel, `out` writable.
 */
enum PdStatus pd_warp(const struct PdDepth *depth,
                      const double *dphi,
                      const double *dtheta,
                      struct PdDepth **out);

struct PdEvalOptions pd_eval_options_default(void);

/**
 * Evaluates two JSON Lines manifests and returns the report as a JSON
 * string in `json_out`, to be released with [`pd_string_free`].
 *
 * # Safety
 * Paths must be NUL-terminated; `opts` may be null for defaults;
 * `json_out` must be writable.
 */
enum PdStatus pd_evaluate_manifests(const char *pred_manifest,
                                    const char *gt_manifest,
                                    const struct PdEvalOptions *opts,
                                    char **json_out);

/**
 * `1 / ((1 − accuracy) · error)`; `+inf` when the denominator is zero.
 */
double pd_indicator(double accuracy, double error);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void pd_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PANO_DEPTH_H */
