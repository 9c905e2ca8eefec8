#ifndef VESICLE_H
#define VESICLE_H

/* Generated by cbindgen at build time. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum VesicleStatus {
  VESICLE_STATUS_OK = 0,
  VESICLE_STATUS_NULL_POINTER = 1,
  VESICLE_STATUS_INVALID_ARGUMENT = 2,
  VESICLE_STATUS_CONFIG = 3,
  VESICLE_STATUS_NOT_CONVERGED = 4,
  VESICLE_STATUS_SINGULAR = 5,
  VESICLE_STATUS_IO = 6,
  VESICLE_STATUS_BUFFER_TOO_SMALL = 7,
  VESICLE_STATUS_PANIC = 8,
} VesicleStatus;

// Selects one of the five solution components.
typedef enum VesicleField {
  VESICLE_FIELD_PHI = 0,
  VESICLE_FIELD_MU = 1,
  VESICLE_FIELD_OMEGA = 2,
  VESICLE_FIELD_PSI = 3,
  VESICLE_FIELD_NU = 4,
} VesicleField;

// Opaque simulation handle.
typedef struct VesicleSim VesicleSim;

// Energies, surface quadrature, masses and region concentrations of the
// current state.
typedef struct VesicleDiagnostics {
  double time;
  double f_surf;
  double f_bend;
  double f_area;
  double f_osm;
  double f_total;
  double b_h;
  double total_mass;
  double inner_mass;
  double outer_mass;
  double inner_conc;
  double outer_conc;
  size_t vcycle_count;
} VesicleDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates a simulation from config text (`section.key = value` lines on
// top of the defaults).
//
// # Safety
// `config_text` must be a valid NUL-terminated string and `out` a valid
// pointer. On success `*out` owns a handle to be released with
// [`vesicle_sim_free`].
enum VesicleStatus vesicle_sim_new(const char *config_text, struct VesicleSim **out);

// Creates a simulation from a named preset, optionally overridden by
// config text (`overrides` may be null).
//
// # Safety
// `name` must be a valid NUL-terminated string, `overrides` null or one,
// and `out` a valid pointer.
enum VesicleStatus vesicle_sim_new_preset(const char *name,
                                          const char *overrides,
                                          struct VesicleSim **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `sim` must be null or a handle from this library that has not been
// freed yet.
void vesicle_sim_free(struct VesicleSim *sim);

// Advances `steps` time steps. `iterations` (may be null) receives the
// V-cycle count of the last step taken.
//
// # Safety
// `sim` must be a live handle; `iterations` null or valid.
enum VesicleStatus vesicle_sim_step(struct VesicleSim *sim, size_t steps, size_t *iterations);

// Advances until the configured number of steps has been taken.
//
// # Safety
// `sim` must be a live handle.
enum VesicleStatus vesicle_sim_run(struct VesicleSim *sim);

// Simulated time and steps taken so far; either pointer may be null.
//
// # Safety
// `sim` must be a live handle; the out pointers null or valid.
enum VesicleStatus vesicle_sim_time(const struct VesicleSim *sim, double *time, size_t *steps);

// Grid cell counts in x and y.
//
// # Safety
// `sim` must be a live handle; `m` and `n` valid pointers.
enum VesicleStatus vesicle_sim_grid_size(const struct VesicleSim *sim, size_t *m, size_t *n);

// Copies the interior values of one component into `buf`, laid out with
// the y index fastest (`buf[i * n + j]`, zero based). `len` must be at
// least `m * n`.
//
// # Safety
// `sim` must be a live handle and `buf` valid for `len` writes.
enum VesicleStatus vesicle_sim_copy_field(const struct VesicleSim *sim,
                                          enum VesicleField field,
                                          double *buf,
                                          size_t len);

// Diagnostics of the current state.
//
// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum VesicleStatus vesicle_sim_diagnostics(const struct VesicleSim *sim,
                                           struct VesicleDiagnostics *out);

// Runs a whole simulation from config text and writes its diagnostics,
// residuals and snapshots into `out_dir`.
//
// # Safety
// Both arguments must be valid NUL-terminated strings.
enum VesicleStatus vesicle_run_to_dir(const char *config_text, const char *out_dir);

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to `len`). Returns the full message length
// without the terminator; pass a null `buf` to query it.
//
// # Safety
// `buf` must be null or valid for `len` writes.
size_t vesicle_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *vesicle_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VESICLE_H */
