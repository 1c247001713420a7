#ifndef AMBRIS_H
#define AMBRIS_H

/*
 * C interface to the ambris RIS-assisted ambient backscatter simulator.
 *
 * This header matches crates/ambris-ffi/src/lib.rs. After changing the Rust
 * surface, regenerate with:
 *   cbindgen --crate ambris-ffi --config cbindgen.toml --output include/ambris.h
 *
 * Conventions: every function returns an AmbrisStatus; on failure a detailed
 * message is available from ambris_last_error_message() until the next
 * failing call on the same thread. Handles must be released with their
 * matching *_free function (null is accepted). Beam and cell indices are
 * 1-based, phase and grid indices 0-based, matching the CSV outputs.
 */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 * Status code returned by every FFI entry point.
 */
typedef enum AmbrisStatus {
  AmbrisStatus_Ok = 0,
  /*
   * A required pointer argument was null.
   */
  AmbrisStatus_NullArgument = 1,
  /*
   * A string argument was not valid UTF-8.
   */
  AmbrisStatus_InvalidUtf8 = 2,
  /*
   * Bad configuration or argument value (config syntax, unknown keys,
   * out-of-range indices, invariant violations).
   */
  AmbrisStatus_InvalidArgument = 3,
  /*
   * Domain error in the model (singular distance, undefined phase,
   * mismatched dimensions).
   */
  AmbrisStatus_Domain = 4,
  /*
   * File system error while writing outputs.
   */
  AmbrisStatus_Io = 5,
  /*
   * Unexpected internal failure.
   */
  AmbrisStatus_Internal = 6,
} AmbrisStatus;

/*
 * Focusing codebook (opaque).
 */
typedef struct AmbrisCodebook AmbrisCodebook;

/*
 * Parsed run configuration (opaque).
 */
typedef struct AmbrisConfig AmbrisConfig;

/*
 * Reflected-field map (opaque).
 */
typedef struct AmbrisMap AmbrisMap;

/*
 * Search or evaluation outcome (opaque).
 */
typedef struct AmbrisResult AmbrisResult;

#ifdef __cplusplus
extern "C" {
#endif  // __cplusplus

/*
 * Copy the most recent error message for this thread into `buffer`.
 *
 * Returns the full message length including the trailing NUL. When
 * `capacity` is smaller, the copy is truncated but still NUL-terminated;
 * with a null buffer or zero capacity nothing is copied. Returns 0 when no
 * error has occurred yet.
 */
uintptr_t ambris_last_error_message(char *buffer, uintptr_t capacity);

/*
 * Parse a JSON run configuration (schema version 1) into a handle.
 */
AmbrisStatus ambris_config_parse(const char *json, AmbrisConfig **out);

void ambris_config_free(AmbrisConfig *config);

/*
 * Set the worker thread count (0 restores the library default).
 */
AmbrisStatus ambris_config_set_threads(AmbrisConfig *config, uintptr_t threads);

/*
 * Override the output directory used by ambris_run_command().
 */
AmbrisStatus ambris_config_set_out_dir(AmbrisConfig *config, const char *dir);

/*
 * Evaluate every (beam, phase) pair of the configured scenario.
 */
AmbrisStatus ambris_evaluate(const AmbrisConfig *config, AmbrisResult **out);

/*
 * Run the quantized-feedback search. `budget` 0 means the full grid.
 */
AmbrisStatus ambris_feedback_search(const AmbrisConfig *config,
                                    uintptr_t budget,
                                    AmbrisResult **out);

void ambris_result_free(AmbrisResult *result);

/*
 * Number of beams and phase-grid points covered by a result.
 */
AmbrisStatus ambris_result_dims(const AmbrisResult *result,
                                uintptr_t *out_beams,
                                uintptr_t *out_phases);

/*
 * Contrast and BER of one pair. `beam` is 1-based, `phase` 0-based.
 */
AmbrisStatus ambris_result_entry(const AmbrisResult *result,
                                 uintptr_t beam,
                                 uintptr_t phase,
                                 double *out_contrast,
                                 double *out_ber);

/*
 * Winning pair of the search (1-based beam, 0-based phase).
 */
AmbrisStatus ambris_result_best(const AmbrisResult *result,
                                uintptr_t *out_beam,
                                uintptr_t *out_phase);

/*
 * No-RIS reference contrast and BER.
 */
AmbrisStatus ambris_result_reference(const AmbrisResult *result,
                                     double *out_contrast,
                                     double *out_ber);

/*
 * Build the focusing codebook for the configured scenario.
 */
AmbrisStatus ambris_codebook_new(const AmbrisConfig *config, AmbrisCodebook **out);

void ambris_codebook_free(AmbrisCodebook *codebook);

/*
 * Number of beams and of cells per beam.
 */
AmbrisStatus ambris_codebook_dims(const AmbrisCodebook *codebook,
                                  uintptr_t *out_beams,
                                  uintptr_t *out_cells);

/*
 * Reflection phase of one cell in [0, 2*pi). Both indices are 1-based.
 */
AmbrisStatus ambris_codebook_phase(const AmbrisCodebook *codebook,
                                   uintptr_t beam,
                                   uintptr_t cell,
                                   double *out_phase_rad);

/*
 * Sample the reflected field of one beam over the configured map grid.
 * `beam` is 1-based; `delta_deg` is the common phase shift in degrees.
 */
AmbrisStatus ambris_field_map(const AmbrisConfig *config,
                              uintptr_t beam,
                              double delta_deg,
                              bool include_direct,
                              AmbrisMap **out);

void ambris_map_free(AmbrisMap *map);

/*
 * Grid dimensions of a field map.
 */
AmbrisStatus ambris_map_dims(const AmbrisMap *map, uintptr_t *out_nx, uintptr_t *out_ny);

/*
 * Map value in dB at grid indices (i, j) (0-based).
 */
AmbrisStatus ambris_map_value(const AmbrisMap *map,
                              uintptr_t i,
                              uintptr_t j,
                              double *out_db);

/*
 * Location and value of the map maximum (row-major tie-break).
 */
AmbrisStatus ambris_map_peak(const AmbrisMap *map,
                             uintptr_t *out_i,
                             uintptr_t *out_j,
                             double *out_db);

/*
 * Energy-detector BER for a contrast and noise level.
 */
AmbrisStatus ambris_ber_from_contrast(double contrast, double sigma, double *out_ber);

/*
 * Execute one of the file-emitting commands into the config's output
 * directory: "codebook", "evaluate", "search", or "report".
 * Field maps are available through ambris_field_map() instead.
 */
AmbrisStatus ambris_run_command(const AmbrisConfig *config, const char *command);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AMBRIS_H */
