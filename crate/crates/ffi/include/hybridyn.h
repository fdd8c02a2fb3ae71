#ifndef HYBRIDYN_H
#define HYBRIDYN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum HybStatus {
  HYB_STATUS_OK = 0,
  HYB_STATUS_NULL_POINTER = 1,
  HYB_STATUS_INVALID_ARGUMENT = 2,
  HYB_STATUS_INVALID_MODEL = 3,
  HYB_STATUS_INVALID_GRID = 4,
  HYB_STATUS_OUT_OF_DOMAIN = 5,
  HYB_STATUS_BOUNDARY_MASS = 6,
  HYB_STATUS_SEPARATION = 7,
  HYB_STATUS_ASSEMBLY_TOO_LARGE = 8,
  HYB_STATUS_NUMERICAL = 9,
  HYB_STATUS_IO = 10,
  HYB_STATUS_PANIC = 11,
} HybStatus;

// Measurement model.
typedef struct HybModel HybModel;

// Assembled finite-basis operator.
typedef struct HybOperator HybOperator;

// Hybrid state.
typedef struct HybState HybState;

// Rectangular phase-space grid, cell-centred.
typedef struct HybGrid {
  double q_min;
  double q_max;
  double p_min;
  double p_max;
  size_t n_q;
  size_t n_p;
} HybGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length without the NUL.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t hyb_last_error(char *buf, size_t len);

// The reference model: two outcomes, harmonic pointer, `V_cm = q`.
struct HybModel *hyb_model_golden(void);

// Builds a model. `c0` holds `dim` interleaved `re, im` pairs; `h_cm` and
// `v_cm` are coefficients of `q^a p^b` in graded order 1, q, p, q², qp, p², ...
//
// # Safety
// Array arguments must point to the stated number of readable values; `out`
// must be writable.
enum HybStatus hyb_model_new(size_t dim,
                             const double *h,
                             const double *v,
                             const double *c0,
                             const double *h_cm,
                             size_t h_cm_len,
                             const double *v_cm,
                             size_t v_cm_len,
                             double hbar,
                             double t0,
                             double q0,
                             double p0,
                             struct HybModel **out);

// # Safety
// `model` must be null or come from this library and not be freed yet.
void hyb_model_free(struct HybModel *model);

// Candidate solution 7, 9 or 10 at time `t` as a point state.
//
// # Safety
// `model` must be a live model; `out` must be writable.
enum HybStatus hyb_candidate(const struct HybModel *model,
                             uint32_t which,
                             double t,
                             struct HybState **out);

// # Safety
// `state` must be null or come from this library and not be freed yet.
void hyb_state_free(struct HybState *state);

// Number of quantum levels, 0 for a null state.
//
// # Safety
// `state` must be null or a live state.
size_t hyb_state_dim(const struct HybState *state);

// # Safety
// `state` must be a live state; `out` must be writable.
enum HybStatus hyb_state_trace(const struct HybState *state, double *out);

// Assembles a state over `bins`. Grid states require `bins` to equal their
// own grid.
//
// # Safety
// `state` must be a live state; `out` must be writable.
enum HybStatus hyb_assemble(const struct HybState *state,
                            struct HybGrid bins,
                            struct HybOperator **out);

// # Safety
// `op` must be null or come from this library and not be freed yet.
void hyb_operator_free(struct HybOperator *op);

// Side length of the assembled matrix, 0 for a null operator.
//
// # Safety
// `op` must be null or a live operator.
size_t hyb_operator_dim(const struct HybOperator *op);

// # Safety
// `op` must be a live operator; `out` must be writable.
enum HybStatus hyb_min_eigenvalue(const struct HybOperator *op, double *out);

// `tr(ρ²)` of the trace-normalized operator.
//
// # Safety
// `op` must be a live operator; `out` must be writable.
enum HybStatus hyb_purity(const struct HybOperator *op, double *out);

// `‖ρ² − ρ‖_F` of the trace-normalized operator.
//
// # Safety
// `op` must be a live operator; `out` must be writable.
enum HybStatus hyb_idempotency_residual(const struct HybOperator *op, double *out);

// # Safety
// `op` must be a live operator; `out` must be writable.
enum HybStatus hyb_linear_entropy(const struct HybOperator *op, double *out);

// Von Neumann entropy. `defined` is set to false, and `out` to the most
// negative eigenvalue, when the operator is not nonnegative.
//
// # Safety
// `op` must be a live operator; `out` and `defined` must be writable.
enum HybStatus hyb_von_neumann_entropy(const struct HybOperator *op, double *out, bool *defined);

// Total residual of candidate 7, 9 or 10 at `t` with difference step `dt_fd`.
//
// # Safety
// `model` must be a live model; `out` must be writable.
enum HybStatus hyb_residual(const struct HybModel *model,
                            uint32_t which,
                            double t,
                            double dt_fd,
                            double *out);

// Writes a snapshot. `bins` is ignored for grid states.
//
// # Safety
// `state` must be a live state and `path` a NUL-terminated string.
enum HybStatus hyb_snapshot_write(const struct HybState *state,
                                  struct HybGrid bins,
                                  double hbar,
                                  double t,
                                  const char *path_);

// Reads a snapshot. `grid` receives the kernel grid or assembly bins, `t`
// the snapshot time; either may be null.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum HybStatus hyb_snapshot_read(const char *path_,
                                 struct HybState **out,
                                 struct HybGrid *grid,
                                 double *t);

// Largest relative residual of the commutator factorization over `trials`
// seeded random quadruples.
//
// # Safety
// `out` must be writable.
enum HybStatus hyb_identity_check(size_t dim, size_t trials, uint64_t seed, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYBRIDYN_H */
