#ifndef MJP_STEIN_H
#define MJP_STEIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MjpStatus {
  MJP_STATUS_OK = 0,
  MJP_STATUS_NULL_POINTER = 1,
  MJP_STATUS_INVALID_ARGUMENT = 2,
  MJP_STATUS_BUFFER_TOO_SMALL = 3,
  MJP_STATUS_DIMENSION = 4,
  MJP_STATUS_STABILITY = 5,
  MJP_STATUS_DEFINITENESS = 6,
  MJP_STATUS_NUMERICAL = 7,
  MJP_STATUS_FACTORIZATION = 8,
  MJP_STATUS_SCALE = 9,
  MJP_STATUS_MODEL = 10,
  MJP_STATUS_REDUCIBLE = 11,
  MJP_STATUS_CONVERGENCE = 12,
  MJP_STATUS_PRECONDITION = 13,
  MJP_STATUS_CONFIG = 14,
  MJP_STATUS_IO = 15,
  MJP_STATUS_PANIC = 16,
} MjpStatus;

/*
 A truncated chain together with its model.
 */
typedef struct MjpChain MjpChain;

/*
 Integer jump vectors with nonnegative weights.
 */
typedef struct MjpJumpSet MjpJumpSet;

/*
 A process specification.
 */
typedef struct MjpProcess MjpProcess;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failure on this thread; empty when none. The
 pointer stays valid until the next failing call on the same thread.
 */
const char *mjp_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *mjp_version(void);

/*
 Solves `AΣ + ΣAᵀ + σ² = 0`. Writes `Σ` (row-major, `d*d`) and
 `α₁ = λ_min(Σ^{-1/2}σ²Σ^{-1/2})/2`.

 # Safety
 `a` and `sigma2` must point to `d*d` readable doubles, `out_sigma` to
 `d*d` writable doubles and `out_alpha1` to one writable double.
 */
enum MjpStatus mjp_lyapunov(size_t d,
                            const double *a,
                            const double *sigma2,
                            double *out_sigma,
                            double *out_alpha1);

/*
 Writes an integer jump set with weights `w` such that
 `Σ_J w_J J Jᵀ = σ²` into `*out`.

 # Safety
 `sigma2` must point to `d*d` readable doubles; `out` must be writable.
 */
enum MjpStatus mjp_factorize(size_t d, const double *sigma2, struct MjpJumpSet **out);

/*
 Number of jumps in the set, or 0 for NULL.

 # Safety
 `set` must be NULL or a live handle from [`mjp_factorize`].
 */
size_t mjp_jump_set_len(const struct MjpJumpSet *set);

/*
 Jump `k`: writes its `d` coordinates and its weight.

 # Safety
 `set` must be a live handle; `out_coords` must hold `d` values.
 */
enum MjpStatus mjp_jump_set_get(const struct MjpJumpSet *set,
                                size_t k,
                                int64_t *out_coords,
                                double *out_weight);

/*
 # Safety
 `set` must be NULL or a handle not yet freed.
 */
void mjp_jump_set_free(struct MjpJumpSet *set);

/*
 Parses a process document (TOML with `schema_version` and `[process]`).

 # Safety
 `text` must be a NUL-terminated string; `out` must be writable.
 */
enum MjpStatus mjp_process_from_toml(const char *text, struct MjpProcess **out);

/*
 The elementary process realising `(c, A, σ²)` at scale `n`.

 # Safety
 `c` must hold `d` doubles, `a` and `sigma2` `d*d` each; `out` writable.
 */
enum MjpStatus mjp_process_elementary(size_t d,
                                      const double *c,
                                      const double *a,
                                      const double *sigma2,
                                      uint64_t n,
                                      struct MjpProcess **out);

/*
 Dimension of the process, or 0 for NULL.

 # Safety
 `p` must be NULL or a live handle.
 */
size_t mjp_process_dim(const struct MjpProcess *p);

/*
 # Safety
 `p` must be NULL or a handle not yet freed.
 */
void mjp_process_free(struct MjpProcess *p);

/*
 Enumerates the states with `‖X - nc‖_Σ ≤ nδ` and assembles the
 generator. The process handle is not consumed.

 # Safety
 `p` must be a live handle; `out` writable.
 */
enum MjpStatus mjp_chain_new(const struct MjpProcess *p, double delta, struct MjpChain **out);

/*
 Number of states, or 0 for NULL.

 # Safety
 `c` must be NULL or a live handle.
 */
size_t mjp_chain_len(const struct MjpChain *c);

/*
 Writes the `d` coordinates of state `i`.

 # Safety
 `c` must be a live handle; `out_coords` must hold `d` values.
 */
enum MjpStatus mjp_chain_state(const struct MjpChain *c, size_t i, int64_t *out_coords);

/*
 Index of the state with coordinates `x`, or `MJP_STATUS_INVALID_ARGUMENT`
 when it lies outside the truncation.

 # Safety
 `c` must be a live handle; `x` must hold `d` values.
 */
enum MjpStatus mjp_chain_index_of(const struct MjpChain *c, const int64_t *x, size_t *out_index);

/*
 # Safety
 `c` must be NULL or a handle not yet freed.
 */
void mjp_chain_free(struct MjpChain *c);

/*
 Stationary distribution in state order.

 # Safety
 `c` must be a live handle; `out_probs` must hold `capacity` doubles.
 */
enum MjpStatus mjp_stationary(const struct MjpChain *c, double *out_probs, size_t capacity);

/*
 Solves `Qh = 1_B - π(B)` with `πᵀh = 0`, where `B` is given by state
 indices. Writes `h` in state order and `π(B)`.

 # Safety
 `c` must be a live handle; `target` must hold `target_len` indices;
 `out_h` must hold `capacity` doubles; `out_pi_b` may be NULL.
 */
enum MjpStatus mjp_stein(const struct MjpChain *c,
                         const size_t *target,
                         size_t target_len,
                         double *out_h,
                         size_t capacity,
                         double *out_pi_b);

/*
 Total variation distance between two weight vectors over the same `len`
 states, each normalised to unit mass first.

 # Safety
 `p` and `q` must hold `len` doubles; `out` must be writable.
 */
enum MjpStatus mjp_tv_distance(const double *p, const double *q, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MJP_STEIN_H */
