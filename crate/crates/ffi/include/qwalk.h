/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef QWALK_H
#define QWALK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum QwStatus {
  QW_STATUS_OK = 0,
  QW_STATUS_NULL_POINTER = 1,
  QW_STATUS_INVALID_DIMENSION = 2,
  QW_STATUS_DIMENSION_MISMATCH = 3,
  QW_STATUS_RANGE = 4,
  QW_STATUS_CONFIG = 5,
  QW_STATUS_DEGENERATE = 6,
  QW_STATUS_UNDEFINED_CONTRAST = 7,
  QW_STATUS_UNSUPPORTED = 8,
  QW_STATUS_INSUFFICIENT_STEPS = 9,
  QW_STATUS_FORMAT = 10,
  QW_STATUS_IO = 11,
  QW_STATUS_INVALID_STRING = 12,
  QW_STATUS_BUFFER_TOO_SMALL = 13,
  QW_STATUS_PANIC = 99,
} QwStatus;

typedef enum QwHalf {
  QW_HALF_H = 0,
  QW_HALF_V = 1,
} QwHalf;

typedef enum QwPhotons {
  QW_PHOTONS_H = 0,
  QW_PHOTONS_V = 1,
  QW_PHOTONS_BOTH = 2,
} QwPhotons;

// Opaque virtual lab.
typedef struct QwLab QwLab;

// Opaque transmission matrix.
typedef struct QwTm QwTm;

// Lab parameters. Fill with [`qw_lab_config_default`] and adjust.
typedef struct QwLabConfig {
  size_t n_in_h;
  size_t n_in_v;
  size_t n_out;
  // Size of the random unitary; 0 means `n_in_h + n_in_v + n_out`.
  size_t ambient_dim;
  uint64_t fiber_seed;
  uint64_t detector_seed;
  double visibility;
  double coherence_scale_mm;
  double pair_rate;
  double coincidence_window_s;
  double dark_rate;
  double efficiency;
  // Nonzero enables Poisson counting noise.
  uint8_t poisson;
} QwLabConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *qw_version(void);

// Message of the last failed call on this thread, or null. Valid until the
// next failing call on the same thread.
const char *qw_last_error(void);

// # Safety
// `out` must be null or point to writable memory for one `QwLabConfig`.
enum QwStatus qw_lab_config_default(struct QwLabConfig *out);

// # Safety
// `cfg` must be null or point to a valid `QwLabConfig`; `out` must be null
// or writable. On success `*out` owns a lab to be released by `qw_lab_free`.
enum QwStatus qw_lab_new(const struct QwLabConfig *cfg, struct QwLab **out);

// # Safety
// `lab` must be null or a handle from `qw_lab_new` not yet freed.
void qw_lab_free(struct QwLab *lab);

// # Safety
// `lab` must be a live handle; out-pointers must be null or writable.
enum QwStatus qw_lab_dims(const struct QwLab *lab, size_t *n_in_h, size_t *n_in_v, size_t *n_out);

// Camera grid of the output plane (`rows * cols >= n_out`).
//
// # Safety
// `lab` must be a live handle; out-pointers must be null or writable.
enum QwStatus qw_lab_grid(const struct QwLab *lab, size_t *rows, size_t *cols);

// # Safety
// `lab` must be a live handle.
enum QwStatus qw_lab_set_delay(struct QwLab *lab, double delay_mm);

// # Safety
// `lab` must be a live handle and `phases` must hold `len` values.
enum QwStatus qw_lab_set_slm(struct QwLab *lab,
                             enum QwHalf which,
                             const double *phases,
                             size_t len);

// # Safety
// `lab` must be a live handle.
enum QwStatus qw_lab_set_input_mode(struct QwLab *lab, enum QwHalf which, size_t mode);

// Counts accumulated over `duration_s` between F1 at `x` and F2 at `y`.
//
// # Safety
// `lab` must be a live handle; `counts` must be null or writable.
enum QwStatus qw_lab_count_coincidences(struct QwLab *lab,
                                        size_t x,
                                        size_t y,
                                        double duration_s,
                                        double *counts);

// Expected coincidence rate, accidentals included.
//
// # Safety
// `lab` must be a live handle; `rate` must be null or writable.
enum QwStatus qw_lab_coincidence_rate(const struct QwLab *lab, size_t x, size_t y, double *rate);

// # Safety
// `lab` must be a live handle; `rate` must be null or writable.
enum QwStatus qw_lab_singles_rate(const struct QwLab *lab, size_t pos, double *rate);

// Camera frame, row-major over the grid from [`qw_lab_grid`].
//
// # Safety
// `lab` must be a live handle and `out` must hold `len` values.
enum QwStatus qw_lab_intensity_image(struct QwLab *lab,
                                     enum QwPhotons which,
                                     double exposure_s,
                                     double *out,
                                     size_t len);

// Phase-stepping measurement. `reference_mode < 0` selects an external
// plane reference; otherwise that input mode serves as the reference. The
// returned matrix is calibrated by the measured reference magnitude.
//
// # Safety
// `lab` must be a live handle; `out` must be null or writable. On success
// `*out` must be released with `qw_tm_free`.
enum QwStatus qw_tm_measure(struct QwLab *lab,
                            int64_t reference_mode,
                            size_t phase_steps,
                            double exposure_s,
                            struct QwTm **out);

// Copy of the lab's hidden matrix, for validation.
//
// # Safety
// `lab` must be a live handle; `out` must be null or writable.
enum QwStatus qw_tm_oracle(const struct QwLab *lab, struct QwTm **out);

// # Safety
// `tm` must be null or a live matrix handle.
void qw_tm_free(struct QwTm *tm);

// # Safety
// `tm` must be a live handle; out-pointers must be null or writable.
enum QwStatus qw_tm_dims(const struct QwTm *tm, size_t *rows, size_t *cols, size_t *n_in_h);

// # Safety
// `tm` must be a live handle; out-pointers must be null or writable.
enum QwStatus qw_tm_entry(const struct QwTm *tm, size_t row, size_t col, double *re, double *im);

// # Safety
// `tm` must be a live handle and `path` a NUL-terminated UTF-8 string.
enum QwStatus qw_tm_save(const struct QwTm *tm, const char *path);

// # Safety
// `path` must be a NUL-terminated UTF-8 string; `out` null or writable.
enum QwStatus qw_tm_load(const char *path, struct QwTm **out);

// Row-phase-invariant fidelity between two matrices of equal shape.
//
// # Safety
// Both handles must be live; `out` must be null or writable.
enum QwStatus qw_tm_fidelity(const struct QwTm *a, const struct QwTm *b, double *out);

// Phase-conjugation mask focusing one SLM half onto output `x`.
//
// # Safety
// `tm` must be a live handle and `phases` must hold `len` values.
enum QwStatus qw_focus(const struct QwTm *tm,
                       size_t x,
                       enum QwHalf which,
                       double *phases,
                       size_t len);

// Masks sending both photons to `(|x⟩ + e^{iφ}|y⟩)/√2`.
//
// # Safety
// `tm` must be a live handle; `phases_h`/`phases_v` must hold `len_h`/`len_v` values.
enum QwStatus qw_superposition(const struct QwTm *tm,
                               size_t x,
                               size_t y,
                               double phi_h,
                               double phi_v,
                               double *phases_h,
                               size_t len_h,
                               double *phases_v,
                               size_t len_v);

// `|A1|² + |A2|² + 2·V·Re(A1·conj(A2))` for pathway amplitudes in polar form.
//
// # Safety
// `out` must be null or writable.
enum QwStatus qw_coincidence_rate(double a1_abs,
                                  double a1_arg,
                                  double a2_abs,
                                  double a2_arg,
                                  double visibility,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QWALK_H */
