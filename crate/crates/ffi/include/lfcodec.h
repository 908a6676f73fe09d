#ifndef LFCODEC_H
#define LFCODEC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LfcStatus {
  LFC_STATUS_OK = 0,
  LFC_STATUS_NULL_ARGUMENT = 1,
  LFC_STATUS_INVALID_ARGUMENT = 2,
  LFC_STATUS_IO = 3,
  LFC_STATUS_FORMAT = 4,
  LFC_STATUS_SHAPE = 5,
  LFC_STATUS_CONFIG = 6,
  LFC_STATUS_TRUNCATED = 7,
  LFC_STATUS_CORRUPT = 8,
  LFC_STATUS_INTERNAL = 9,
} LfcStatus;

/**
 * An owned byte buffer, e.g. an encoded container.
 */
typedef struct LfcBuffer LfcBuffer;

/**
 * Pipeline configuration, starting from defaults.
 */
typedef struct LfcConfig LfcConfig;

/**
 * A light field with samples in `[0, 1]`.
 */
typedef struct LfcLightField LfcLightField;

/**
 * A trained patch autoencoder.
 */
typedef struct LfcModel LfcModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; valid until the next
 * failing call. Never null.
 */
const char *lfc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lfc_version(void);

/**
 * Loads a light field from a manifest file.
 *
 * # Safety
 * `manifest` must be a NUL-terminated string; `out` must be writable.
 */
enum LfcStatus lfc_light_field_load(const char *manifest, struct LfcLightField **out);

/**
 * Builds a light field from `len` samples ordered `(c, t, s, v, u)`.
 *
 * # Safety
 * `samples` must point to `len` readable doubles; `out` must be writable.
 */
enum LfcStatus lfc_light_field_from_samples(size_t s,
                                            size_t t,
                                            size_t w,
                                            size_t h,
                                            size_t channels,
                                            const double *samples,
                                            size_t len,
                                            struct LfcLightField **out);

/**
 * Writes the dimensions; any output pointer may be null.
 *
 * # Safety
 * `lf` must come from this library; non-null outputs must be writable.
 */
enum LfcStatus lfc_light_field_dims(const struct LfcLightField *lf,
                                    size_t *s,
                                    size_t *t,
                                    size_t *w,
                                    size_t *h,
                                    size_t *channels);

/**
 * Borrows the samples, ordered `(c, t, s, v, u)`, for the lifetime of `lf`.
 *
 * # Safety
 * `lf` must come from this library; `data` and `len` must be writable.
 */
enum LfcStatus lfc_light_field_samples(const struct LfcLightField *lf,
                                       const double **data,
                                       size_t *len);

/**
 * # Safety
 * `lf` must be null or come from this library, and not be used afterwards.
 */
void lfc_light_field_free(struct LfcLightField *lf);

/**
 * Plain PSNR (peak 1) over every sample of two equally shaped light fields.
 *
 * # Safety
 * Both handles must come from this library; `out` must be writable.
 */
enum LfcStatus lfc_psnr(const struct LfcLightField *a, const struct LfcLightField *b, double *out);

/**
 * Loads a model file written by `train-dbn`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum LfcStatus lfc_model_load(const char *path, struct LfcModel **out);

/**
 * # Safety
 * `model` must be null or come from this library, and not be used afterwards.
 */
void lfc_model_free(struct LfcModel *model);

/**
 * Creates a configuration holding the defaults.
 *
 * # Safety
 * `out` must be writable.
 */
enum LfcStatus lfc_config_new(struct LfcConfig **out);

/**
 * Sets one `section.key` entry, e.g. `("quant.bits", "8")`.
 *
 * # Safety
 * `cfg` must come from this library; `key` and `value` must be NUL-terminated.
 */
enum LfcStatus lfc_config_set(struct LfcConfig *cfg, const char *key, const char *value);

/**
 * # Safety
 * `cfg` must be null or come from this library, and not be used afterwards.
 */
void lfc_config_free(struct LfcConfig *cfg);

/**
 * Encodes `lf` into a container. `cfg` may be null for defaults; `model`
 * may be null only for lossless configurations.
 *
 * # Safety
 * Handles must be null or come from this library; `out` must be writable.
 */
enum LfcStatus lfc_encode(const struct LfcLightField *lf,
                          const struct LfcConfig *cfg,
                          const struct LfcModel *model,
                          struct LfcBuffer **out);

/**
 * Decodes up to `max_level` levels (0 means all) of a container.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes; `model` may be null for
 * lossless containers; `out` must be writable; `levels_used` may be null.
 */
enum LfcStatus lfc_decode(const uint8_t *bytes,
                          size_t len,
                          size_t max_level,
                          const struct LfcModel *model,
                          struct LfcLightField **out,
                          size_t *levels_used);

/**
 * Borrows the buffer contents for the lifetime of `buf`.
 *
 * # Safety
 * `buf` must come from this library; `data` and `len` must be writable.
 */
enum LfcStatus lfc_buffer_data(const struct LfcBuffer *buf, const uint8_t **data, size_t *len);

/**
 * # Safety
 * `buf` must be null or come from this library, and not be used afterwards.
 */
void lfc_buffer_free(struct LfcBuffer *buf);

/**
 * Bjontegaard metrics of curve B against anchor curve A; rates in bits
 * per pixel, qualities in dB.
 *
 * # Safety
 * Each array must hold its stated number of doubles; outputs must be writable.
 */
enum LfcStatus lfc_bd_metrics(const double *rate_a,
                              const double *psnr_a,
                              size_t count_a,
                              const double *rate_b,
                              const double *psnr_b,
                              size_t count_b,
                              double *bd_rate,
                              double *bd_psnr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LFCODEC_H */
