#ifndef DCSTYLE_H
#define DCSTYLE_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DcsStatus {
  DCS_STATUS_OK = 0,
  DCS_STATUS_NULL_POINTER = 1,
  DCS_STATUS_INVALID_INPUT = 2,
  DCS_STATUS_DEGENERATE_DEPTH = 3,
  DCS_STATUS_FORMAT = 4,
  DCS_STATUS_MANIFEST = 5,
  DCS_STATUS_NON_FINITE = 6,
  DCS_STATUS_IO = 7,
  DCS_STATUS_IMAGE = 8,
  DCS_STATUS_PANIC = 9,
} DcsStatus;

/**
 * Opaque encoder/decoder pair. Safe to use from several threads at once.
 */
typedef struct DcsEngine DcsEngine;

/**
 * Opaque 8-bit RGB image.
 */
typedef struct DcsImage DcsImage;

typedef struct DcsParams {
  /**
   * Global strength in [0, 1].
   */
  float alpha;
  double depth_min;
  double depth_max;
  /**
   * When true, near regions receive more style.
   */
  bool invert_depth;
} DcsParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *dcs_last_error(void);

const char *dcs_version(void);

struct DcsParams dcs_params_default(void);

/**
 * Loads `encoder.adsw` and `decoder.adsw` from `weights_dir`.
 *
 * # Safety
 * `weights_dir` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DcsStatus dcs_engine_open(const char *weights_dir, struct DcsEngine **out);

/**
 * Engine with deterministic random weights, for testing bindings.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DcsStatus dcs_engine_synthetic(uint64_t seed, struct DcsEngine **out);

/**
 * # Safety
 * `engine` must come from `dcs_engine_open`/`dcs_engine_synthetic` and not
 * be used afterwards. NULL is ignored.
 */
void dcs_engine_free(struct DcsEngine *engine);

/**
 * Loads a PNG or PPM file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DcsStatus dcs_image_load(const char *path, struct DcsImage **out);

/**
 * Copies `len == height * width * 3` interleaved RGB bytes.
 *
 * # Safety
 * `rgb` must point to `len` readable bytes and `out` must be valid.
 */
enum DcsStatus dcs_image_from_rgb(size_t height,
                                  size_t width,
                                  const uint8_t *rgb,
                                  size_t len,
                                  struct DcsImage **out);

/**
 * # Safety
 * `image` must be a valid handle.
 */
size_t dcs_image_width(const struct DcsImage *image);

/**
 * # Safety
 * `image` must be a valid handle.
 */
size_t dcs_image_height(const struct DcsImage *image);

/**
 * Borrowed pointer to `height * width * 3` RGB bytes, valid while the image
 * lives. Writes the byte count to `len` when non-NULL.
 *
 * # Safety
 * `image` must be a valid handle; `len` must be NULL or valid.
 */
const uint8_t *dcs_image_pixels(const struct DcsImage *image, size_t *len);

/**
 * Writes PNG, or PPM when the path ends in `.ppm`/`.pnm`.
 *
 * # Safety
 * `image` must be a valid handle and `path` a NUL-terminated string.
 */
enum DcsStatus dcs_image_save(const struct DcsImage *image, const char *path);

/**
 * # Safety
 * `image` must come from this API and not be used afterwards. NULL is
 * ignored.
 */
void dcs_image_free(struct DcsImage *image);

/**
 * Stylizes `content` with `n_styles` style images.
 *
 * `style_weights` may be NULL for equal weights; otherwise it holds
 * `n_styles` non-negative values summing to 1. At most one of `depth_path`
 * and `mask_path` may be non-NULL. `params` may be NULL for defaults.
 *
 * # Safety
 * All non-NULL pointers must be valid; `styles` must hold `n_styles`
 * image handles.
 */
enum DcsStatus dcs_stylize(const struct DcsEngine *engine,
                           const struct DcsImage *content,
                           const struct DcsImage *const *styles,
                           const float *style_weights,
                           size_t n_styles,
                           const char *depth_path,
                           const char *mask_path,
                           const struct DcsParams *params,
                           struct DcsImage **out);

/**
 * Decodes the unmodified content features.
 *
 * # Safety
 * `engine` and `content` must be valid handles and `out` a valid pointer.
 */
enum DcsStatus dcs_reconstruct(const struct DcsEngine *engine,
                               const struct DcsImage *content,
                               struct DcsImage **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DCSTYLE_H */
