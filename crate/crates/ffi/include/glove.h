#ifndef GLOVE_H
#define GLOVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum GloveStatus {
  GLOVE_STATUS_OK = 0,
  GLOVE_STATUS_NULL_POINTER = 1,
  GLOVE_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Configuration or model document rejected.
   */
  GLOVE_STATUS_CONFIG = 3,
  /**
   * Reading could not be decoded.
   */
  GLOVE_STATUS_DECODE = 4,
  GLOVE_STATUS_SOLVER = 5,
  GLOVE_STATUS_CODEC = 6,
  /**
   * Output buffer too small; the required size was written.
   */
  GLOVE_STATUS_BUFFER_TOO_SMALL = 7,
  GLOVE_STATUS_PANIC = 8,
} GloveStatus;

/**
 * Opaque per-joint angle decoder.
 */
typedef struct GloveDecoder GloveDecoder;

/**
 * Opaque 21-joint hand model.
 */
typedef struct GloveHandModel GloveHandModel;

/**
 * Opaque warm-started hand retargeter.
 */
typedef struct GloveRetargeter GloveRetargeter;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *glove_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *glove_version(void);

/**
 * Creates the hand model from a TOML configuration, or the bundled
 * default when `config_toml` is null.
 *
 * # Safety
 * `config_toml` is null or a NUL-terminated string; `out` is writable.
 */
enum GloveStatus glove_hand_model_new(const char *config_toml, struct GloveHandModel **out);

/**
 * # Safety
 * `model` is null or a handle from [`glove_hand_model_new`] not yet freed.
 */
void glove_hand_model_free(struct GloveHandModel *model);

/**
 * Number of joints, 0 for a null handle.
 *
 * # Safety
 * `model` is null or a live handle.
 */
size_t glove_hand_model_dof(const struct GloveHandModel *model);

/**
 * Fingertip poses for `theta` (`dof` values). Writes 5 positions as
 * `[x, y, z]` triples and 5 orientations as `[w, x, y, z]` quaternions.
 *
 * # Safety
 * `theta` holds `dof` values; `positions` holds 15 and `quaternions` 20.
 */
enum GloveStatus glove_hand_model_forward(const struct GloveHandModel *model,
                                          const double *theta,
                                          size_t dof,
                                          double *positions,
                                          double *quaternions);

/**
 * Creates a decoder from a calibration TOML document, or an empty one
 * when `calibration_toml` is null.
 *
 * # Safety
 * `calibration_toml` is null or NUL-terminated; `out` is writable.
 */
enum GloveStatus glove_decoder_new(const char *calibration_toml, struct GloveDecoder **out);

/**
 * # Safety
 * `decoder` is null or a live handle.
 */
void glove_decoder_free(struct GloveDecoder *decoder);

/**
 * Sets one joint's offsets and field amplitude.
 *
 * # Safety
 * `decoder` is a live handle.
 */
enum GloveStatus glove_decoder_set_joint(struct GloveDecoder *decoder,
                                         size_t joint,
                                         double ox,
                                         double oy,
                                         double b0);

/**
 * Joint angle in `(-pi, pi]` from one reading.
 *
 * # Safety
 * `decoder` is a live handle; `theta` is writable.
 */
enum GloveStatus glove_decoder_decode(const struct GloveDecoder *decoder,
                                      size_t joint,
                                      double bx,
                                      double by,
                                      double *theta);

/**
 * Creates a retargeter from a TOML configuration, or the bundled default
 * when `config_toml` is null.
 *
 * # Safety
 * `config_toml` is null or NUL-terminated; `out` is writable.
 */
enum GloveStatus glove_retargeter_new(const char *config_toml, struct GloveRetargeter **out);

/**
 * # Safety
 * `retargeter` is null or a live handle.
 */
void glove_retargeter_free(struct GloveRetargeter *retargeter);

/**
 * Resets the warm start to the home configuration.
 *
 * # Safety
 * `retargeter` is a live handle.
 */
enum GloveStatus glove_retargeter_reset(struct GloveRetargeter *retargeter);

/**
 * Robot joint angles for operator joint angles `human` (`dof` values).
 * The result becomes the next warm start. `cost`, `iterations` and
 * `converged` may be null.
 *
 * # Safety
 * `human` holds and `robot` receives `dof` values.
 */
enum GloveStatus glove_retargeter_solve(struct GloveRetargeter *retargeter,
                                        const double *human,
                                        size_t dof,
                                        double *robot,
                                        double *cost,
                                        size_t *iterations,
                                        bool *converged);

/**
 * Shape-mode mapping of a normalized `rows` x `cols` grid onto the bundled
 * 32-taxel layout. Writes 32 states: 1 protrude, 0 neutral.
 *
 * # Safety
 * `values` holds `rows * cols` values; `states` receives 32.
 */
enum GloveStatus glove_map_shape(const double *values,
                                 size_t rows,
                                 size_t cols,
                                 double threshold,
                                 int8_t *states);

/**
 * Pressure-mode mapping of a normalized peak pressure with the bundled
 * thresholds. Writes 32 states.
 *
 * # Safety
 * `states` receives 32 values.
 */
enum GloveStatus glove_map_pressure(double p_max, int8_t *states);

/**
 * Encodes `modules` patterns of 32 states each (module `i` at offset
 * `32 * i`) into one `TAGF` record. `written` receives the record length;
 * when `capacity` is too small nothing else is written and
 * [`GloveStatus::BufferTooSmall`] is returned.
 *
 * # Safety
 * `states` holds `32 * modules` values; `out` has `capacity` bytes.
 */
enum GloveStatus glove_encode_record(const int8_t *states,
                                     size_t modules,
                                     uint8_t *out,
                                     size_t capacity,
                                     size_t *written);

/**
 * Decodes one `TAGF` record into 32 states per module. `modules`
 * receives the module count; `capacity` is the size of `states`.
 *
 * # Safety
 * `record` has `len` bytes; `states` has `capacity` entries.
 */
enum GloveStatus glove_decode_record(const uint8_t *record,
                                     size_t len,
                                     int8_t *states,
                                     size_t capacity,
                                     size_t *modules);

/**
 * Divider voltage for taxel resistance `r`, quantized to `adc_bits`
 * (0 disables quantization).
 */
double glove_divider_voltage(double r, double vcc, double r_ref, uint32_t adc_bits);

/**
 * Taxel resistance from a divider reading.
 *
 * # Safety
 * `r` is writable.
 */
enum GloveStatus glove_recover_resistance(double v, double vcc, double r_ref, double *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GLOVE_H */
