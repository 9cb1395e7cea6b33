#ifndef RJMLT_H
#define RJMLT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Integrators accepted by [`rjmlt_render`].
 */
typedef enum rjmlt_integrator {
  RJMLT_INTEGRATOR_MMLT = 0,
  RJMLT_INTEGRATOR_RJMLT = 1,
  RJMLT_INTEGRATOR_PT = 2,
} rjmlt_integrator;

/**
 * Result codes of every exported function.
 */
typedef enum rjmlt_status {
  RJMLT_STATUS_OK = 0,
  RJMLT_STATUS_NULL_POINTER = 1,
  RJMLT_STATUS_INVALID_ARGUMENT = 2,
  RJMLT_STATUS_SCENE = 3,
  RJMLT_STATUS_IO = 4,
  RJMLT_STATUS_NUMERIC = 5,
  RJMLT_STATUS_DIMENSION_MISMATCH = 6,
  RJMLT_STATUS_INITIALIZATION = 7,
  RJMLT_STATUS_PANIC = 8,
} rjmlt_status;

/**
 * An RGB image with `f32` channels, top row first.
 */
typedef struct RjmltImage RjmltImage;

/**
 * A loaded scene.
 */
typedef struct RjmltScene RjmltScene;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *rjmlt_last_error(void);

/**
 * Loads a scene from a JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum rjmlt_status rjmlt_scene_load(const char *path, struct RjmltScene **out);

/**
 * Parses a scene from a JSON string.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum rjmlt_status rjmlt_scene_from_json(const char *json, struct RjmltScene **out);

/**
 * # Safety
 * `scene` must come from a scene constructor and not be freed twice.
 */
void rjmlt_scene_free(struct RjmltScene *scene);

/**
 * Renders `scene`. `budget` is the total mutation count for the
 * Metropolis integrators and samples per pixel for the path tracer.
 * `threads == 0` uses the default pool; the image does not depend on it.
 *
 * # Safety
 * `scene` must be a live handle and `out` a writable pointer.
 */
enum rjmlt_status rjmlt_render(const struct RjmltScene *scene,
                               enum rjmlt_integrator integrator,
                               uint64_t budget,
                               uint64_t seed,
                               uint32_t k_max,
                               uint32_t threads,
                               struct RjmltImage **out);

/**
 * Reads a colour PFM file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum rjmlt_status rjmlt_image_read_pfm(const char *path, struct RjmltImage **out);

/**
 * Writes `image` as little-endian PFM.
 *
 * # Safety
 * `image` must be a live handle and `path` a NUL-terminated string.
 */
enum rjmlt_status rjmlt_image_write_pfm(const struct RjmltImage *image, const char *path);

/**
 * Image dimensions.
 *
 * # Safety
 * `image` must be a live handle; `width` and `height` writable pointers.
 */
enum rjmlt_status rjmlt_image_size(const struct RjmltImage *image,
                                   uint32_t *width,
                                   uint32_t *height);

/**
 * Copies the pixels as interleaved RGB into `data`, which must hold
 * `3 * width * height` floats (`len`).
 *
 * # Safety
 * `image` must be a live handle and `data` valid for `len` writes.
 */
enum rjmlt_status rjmlt_image_copy_rgb(const struct RjmltImage *image, float *data, size_t len);

/**
 * # Safety
 * `image` must come from an image constructor and not be freed twice.
 */
void rjmlt_image_free(struct RjmltImage *image);

/**
 * Mean squared error over pixels and channels.
 *
 * # Safety
 * `a` and `b` must be live handles and `out` a writable pointer.
 */
enum rjmlt_status rjmlt_mse(const struct RjmltImage *a, const struct RjmltImage *b, double *out);

/**
 * Pearson chi-square of `observed` against `expected` (both `bins` long),
 * scaled to `samples` effective counts.
 *
 * # Safety
 * `observed` and `expected` must be valid for `bins` reads; `statistic`,
 * `dof` and `p_value` writable pointers.
 */
enum rjmlt_status rjmlt_chi_square(const double *observed,
                                   const double *expected,
                                   size_t bins,
                                   double samples,
                                   double *statistic,
                                   uint32_t *dof,
                                   double *p_value);

/**
 * Runs the 1D experiment for `variant` ("baseline", "nojacobian",
 * "fixedpoint" or "full") over seeds `seed .. seed + seeds` and returns
 * the pooled chi-square p-value against the target.
 *
 * # Safety
 * `variant` must be a NUL-terminated string and `p_value` writable.
 */
enum rjmlt_status rjmlt_validate1d(const char *variant,
                                   uint64_t steps,
                                   uint64_t seed,
                                   uint32_t seeds,
                                   uint32_t bins,
                                   double *p_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RJMLT_H */
