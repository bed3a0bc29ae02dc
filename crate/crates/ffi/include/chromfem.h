#ifndef CHROMFEM_H
#define CHROMFEM_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ChromfemIsothermKind {
  /**
   * `q = p0`
   */
  CHROMFEM_ISOTHERM_KIND_CONSTANT = 0,
  /**
   * `q = p0 + p1·c`
   */
  CHROMFEM_ISOTHERM_KIND_AFFINE = 1,
  /**
   * `q = p0·p1·c / (1 + p1·c)` with `p0 = q_max`, `p1 = K_eq`
   */
  CHROMFEM_ISOTHERM_KIND_LANGMUIR = 2,
} ChromfemIsothermKind;

/**
 * Result codes. Configuration and numerical failures use the same values
 * as the command-line exit codes.
 */
typedef enum ChromfemStatus {
  CHROMFEM_STATUS_OK = 0,
  /**
   * Null pointer, bad UTF-8 or a buffer that is too small.
   */
  CHROMFEM_STATUS_INVALID_ARGUMENT = 1,
  CHROMFEM_STATUS_CONFIG = 2,
  CHROMFEM_STATUS_NUMERICAL = 3,
  /**
   * A Rust panic was caught at the boundary.
   */
  CHROMFEM_STATUS_PANIC = 4,
} ChromfemStatus;

/**
 * Opaque simulation handle.
 */
typedef struct ChromfemSimulation ChromfemSimulation;

/**
 * An isotherm law with up to two parameters.
 */
typedef struct ChromfemIsotherm {
  enum ChromfemIsothermKind kind;
  double p0;
  double p1;
} ChromfemIsotherm;

typedef struct ChromfemIsothermSample {
  double q;
  double dq;
  double d2q;
  /**
   * `∫₀^c q(s) ds`
   */
  double q_integral;
  /**
   * `∫₀^c s·q′(s) ds`
   */
  double a_integral;
} ChromfemIsothermSample;

/**
 * One row of the mass ledger for the current state.
 */
typedef struct ChromfemLedgerRow {
  size_t step;
  double time;
  double total_mass;
  double inflow_flux;
  double outflow_flux;
  double inflow_q_flux;
  double outflow_q_flux;
  double dissipation;
  double min_nodal;
} ChromfemLedgerRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Evaluate `iso` and its derived quantities at `c`.
 */
enum ChromfemStatus chromfem_isotherm_eval(struct ChromfemIsotherm iso,
                                           double c,
                                           struct ChromfemIsothermSample *out);

/**
 * Build a simulation from configuration text (`key = value` lines).
 *
 * On success `*out` receives a handle owned by the caller.
 */
enum ChromfemStatus chromfem_simulation_new(const char *config, struct ChromfemSimulation **out);

/**
 * Release a handle. Null is ignored.
 */
void chromfem_simulation_free(struct ChromfemSimulation *sim);

/**
 * Advance one time step.
 */
enum ChromfemStatus chromfem_simulation_step(struct ChromfemSimulation *sim);

/**
 * Advance to the configured final time `T`.
 */
enum ChromfemStatus chromfem_simulation_run(struct ChromfemSimulation *sim);

/**
 * Current time and step index.
 */
enum ChromfemStatus chromfem_simulation_time(const struct ChromfemSimulation *sim,
                                             double *time,
                                             size_t *step);

/**
 * Node and triangle counts of the mesh.
 */
enum ChromfemStatus chromfem_simulation_sizes(const struct ChromfemSimulation *sim,
                                              size_t *num_nodes,
                                              size_t *num_triangles);

/**
 * Copy node coordinates as interleaved `x, y` pairs (`2·num_nodes` values).
 */
enum ChromfemStatus chromfem_simulation_nodes(const struct ChromfemSimulation *sim,
                                              double *xy,
                                              size_t len);

/**
 * Copy triangle connectivity (`3·num_triangles` node indices, counterclockwise).
 */
enum ChromfemStatus chromfem_simulation_triangles(const struct ChromfemSimulation *sim,
                                                  size_t *nodes,
                                                  size_t len);

/**
 * Copy the nodal concentration (`num_nodes` values).
 */
enum ChromfemStatus chromfem_simulation_field(const struct ChromfemSimulation *sim,
                                              double *values,
                                              size_t len);

/**
 * Replace the nodal concentration; `len` must equal the node count.
 */
enum ChromfemStatus chromfem_simulation_set_field(struct ChromfemSimulation *sim,
                                                  const double *values,
                                                  size_t len);

/**
 * Mass-ledger row of the current state.
 */
enum ChromfemStatus chromfem_simulation_ledger_row(const struct ChromfemSimulation *sim,
                                                   struct ChromfemLedgerRow *out);

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL,
 * or 0 when there is no error.
 */
size_t chromfem_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *chromfem_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHROMFEM_H */
