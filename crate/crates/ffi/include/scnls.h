#ifndef SCNLS_H
#define SCNLS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ScnlsStatus {
  SCNLS_STATUS_OK = 0,
  SCNLS_STATUS_NULL_POINTER = 1,
  SCNLS_STATUS_INVALID_ARGUMENT = 2,
  SCNLS_STATUS_CONFIG = 3,
  SCNLS_STATUS_UNDER_RESOLVED = 4,
  SCNLS_STATUS_NUMERICAL = 5,
  SCNLS_STATUS_UNSUPPORTED = 6,
  SCNLS_STATUS_IO = 7,
  SCNLS_STATUS_PANIC = 8,
} ScnlsStatus;

/**
 * Parsed experiment configuration.
 */
typedef struct ScnlsConfig ScnlsConfig;

/**
 * Complex field sampled on a grid, tagged with its `ε`.
 */
typedef struct ScnlsField ScnlsField;

/**
 * Uniform periodic grid in one or two dimensions.
 */
typedef struct ScnlsGrid ScnlsGrid;

/**
 * Outcome of an ε-sweep.
 */
typedef struct ScnlsSweep ScnlsSweep;

/**
 * Step statistics of a solve.
 */
typedef struct ScnlsSolveStats {
  double dt;
  uint64_t steps;
  double mass_drift;
  double energy_drift;
} ScnlsSolveStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *scnls_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *scnls_version(void);

/**
 * Grid of `points` samples per axis on `[-half_width, half_width)^dim`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum ScnlsStatus scnls_grid_new(size_t dim,
                                size_t points,
                                double half_width,
                                struct ScnlsGrid **out);

/**
 * # Safety
 * `grid` must be NULL or a handle from [`scnls_grid_new`] not yet freed.
 */
void scnls_grid_free(struct ScnlsGrid *grid);

/**
 * Total number of samples.
 *
 * # Safety
 * `grid` must be a live grid handle and `out` writable.
 */
enum ScnlsStatus scnls_grid_len(const struct ScnlsGrid *grid, size_t *out);

/**
 * Field from separate real and imaginary sample arrays of length
 * equal to the grid size, in row-major order.
 *
 * # Safety
 * `re` and `im` must point to `len` readable doubles.
 */
enum ScnlsStatus scnls_field_from_samples(const struct ScnlsGrid *grid,
                                          double epsilon,
                                          const double *re,
                                          const double *im,
                                          size_t len,
                                          struct ScnlsField **out);

/**
 * Gaussian coherent state of unit mass centred at `position` with
 * wavenumber `wavenumber` (one entry per grid dimension).
 *
 * # Safety
 * `position` and `wavenumber` must point to `dim` readable doubles.
 */
enum ScnlsStatus scnls_field_coherent_state(const struct ScnlsGrid *grid,
                                            double epsilon,
                                            double width,
                                            const double *position,
                                            const double *wavenumber,
                                            struct ScnlsField **out);

/**
 * # Safety
 * `field` must be NULL or a live field handle.
 */
void scnls_field_free(struct ScnlsField *field);

/**
 * Copy the samples into caller arrays of length `len` (the grid size).
 *
 * # Safety
 * `re` and `im` must point to `len` writable doubles.
 */
enum ScnlsStatus scnls_field_values(const struct ScnlsField *field,
                                    double *re,
                                    double *im,
                                    size_t len);

/**
 * `∫|ψ|²`.
 *
 * # Safety
 * `field` must be a live handle and `out` writable.
 */
enum ScnlsStatus scnls_field_mass(const struct ScnlsField *field, double *out);

/**
 * Evolve `field` to `t_end` with coupling `b` and nonlinearity power
 * `sigma`. `dt <= 0` selects the step automatically.
 *
 * # Safety
 * `field` must be a live handle; `out` writable; `stats` NULL or writable.
 */
enum ScnlsStatus scnls_solve(const struct ScnlsField *field,
                             double sigma,
                             double b,
                             double t_end,
                             double dt,
                             struct ScnlsField **out,
                             struct ScnlsSolveStats *stats);

/**
 * Wiener–Sobolev norm `∫(1+|k|)^s |ψ̂|`, `s >= 0`.
 *
 * # Safety
 * `field` must be a live handle and `out` writable.
 */
enum ScnlsStatus scnls_wiener_norm(const struct ScnlsField *field, double s, double *out);

/**
 * `sup|ψ̂|`.
 *
 * # Safety
 * `field` must be a live handle and `out` writable.
 */
enum ScnlsStatus scnls_fl_inf_norm(const struct ScnlsField *field, double *out);

/**
 * `sup|Ŵ|` of the Wigner function of a one-dimensional field.
 *
 * # Safety
 * `field` must be a live handle and `out` writable.
 */
enum ScnlsStatus scnls_wigner_sup(const struct ScnlsField *field, double *out);

/**
 * Weighted distance of the Wigner function to the point mass at
 * `(position, wavenumber / 2π)`.
 *
 * # Safety
 * `field` must be a live handle and `out` writable.
 */
enum ScnlsStatus scnls_delta_distance(const struct ScnlsField *field,
                                      double position,
                                      double wavenumber,
                                      double s,
                                      double *out);

/**
 * Weighted distance between the Wigner function of `evolved` and the
 * free transport of that of `initial` over time `t`.
 *
 * # Safety
 * Both fields must be live handles and `out` writable.
 */
enum ScnlsStatus scnls_transport_mismatch(const struct ScnlsField *evolved,
                                          const struct ScnlsField *initial,
                                          double t,
                                          double s,
                                          double *out);

/**
 * Parse configuration text in the `key = value` format of the CLI.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` writable.
 */
enum ScnlsStatus scnls_config_parse(const char *text, struct ScnlsConfig **out);

/**
 * # Safety
 * `config` must be NULL or a live configuration handle.
 */
void scnls_config_free(struct ScnlsConfig *config);

/**
 * Run the configured ε-sweep on `jobs` threads.
 *
 * # Safety
 * `config` must be a live handle and `out` writable.
 */
enum ScnlsStatus scnls_sweep_run(const struct ScnlsConfig *config,
                                 size_t jobs,
                                 struct ScnlsSweep **out);

/**
 * # Safety
 * `sweep` must be NULL or a live sweep handle.
 */
void scnls_sweep_free(struct ScnlsSweep *sweep);

/**
 * Whether every verdict of the sweep passed.
 *
 * # Safety
 * `sweep` must be a live handle and `out` writable.
 */
enum ScnlsStatus scnls_sweep_all_pass(const struct ScnlsSweep *sweep, bool *out);

/**
 * Write `epsilon,metric,value,runtime_s` rows to `path`.
 *
 * # Safety
 * `sweep` must be a live handle and `path` a NUL-terminated string.
 */
enum ScnlsStatus scnls_sweep_write_csv(const struct ScnlsSweep *sweep, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCNLS_H */
