#ifndef KSYNC_H
#define KSYNC_H

/* C interface of the ksync angular synchronization library. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum KsyncStatus {
  KSYNC_STATUS_OK = 0,
  KSYNC_STATUS_NULL_POINTER = 1,
  KSYNC_STATUS_INVALID_INPUT = 2,
  KSYNC_STATUS_NUMERICAL = 3,
  KSYNC_STATUS_PARSE = 4,
  KSYNC_STATUS_IO = 5,
  KSYNC_STATUS_PANIC = 6,
} KsyncStatus;

/**
 * Solver selector.
 */
typedef enum KsyncSolver {
  KSYNC_SOLVER_EIG_H = 0,
  KSYNC_SOLVER_EIG_R = 1,
  KSYNC_SOLVER_SDP_BM = 2,
} KsyncSolver;

/**
 * Opaque synchronization result.
 */
typedef struct KsyncEstimate KsyncEstimate;

/**
 * Opaque measurement graph.
 */
typedef struct KsyncGraph KsyncGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread (empty after a success).
 * Valid until the next call on the same thread.
 */
const char *ksync_last_error(void);

/**
 * Static name of a status code.
 */
const char *ksync_status_name(KsyncStatus status);

/**
 * Builds a graph on `n` nodes from `m` edges `(i[e], j[e], theta[e])`.
 * Offsets are `θ_i − θ_j` in radians; labels are unknown.
 */
KsyncStatus ksync_graph_from_edges(size_t n,
                                   size_t k,
                                   const size_t *i,
                                   const size_t *j,
                                   const double *theta,
                                   size_t m,
                                   KsyncGraph **out);

/**
 * Reads a graph file: an `n m k` header, then `m` lines `i j theta label`
 * with 1-based node ids.
 */
KsyncStatus ksync_graph_read(const char *path, KsyncGraph **out);

/**
 * Samples an Erdős–Rényi mixture instance with group probabilities `p[0..k]`.
 * When `truth` is non-null it receives the planted angles, group-major
 * (`k * n` values).
 */
KsyncStatus ksync_graph_sample_er(size_t n,
                                  double lambda,
                                  const double *p,
                                  size_t k,
                                  uint64_t seed,
                                  double *truth,
                                  KsyncGraph **out);

/**
 * Node and edge counts of a graph.
 */
KsyncStatus ksync_graph_size(const KsyncGraph *g, size_t *n, size_t *m);

void ksync_graph_free(KsyncGraph *g);

/**
 * Recovers `k` angle groups. `seed` only affects `KSYNC_SOLVER_SDP_BM`.
 */
KsyncStatus ksync_solve(const KsyncGraph *g,
                        size_t k,
                        KsyncSolver solver,
                        uint64_t seed,
                        KsyncEstimate **out);

/**
 * Number of nodes and of groups in an estimate.
 */
KsyncStatus ksync_estimate_size(const KsyncEstimate *est, size_t *n, size_t *k);

/**
 * Copies the angles of group `l` (in `[0, 2π)`) into `out[0..len]`;
 * `len` must equal the node count.
 */
KsyncStatus ksync_estimate_angles(const KsyncEstimate *est, size_t l, double *out, size_t len);

/**
 * Copies the leading eigenvalues (descending) into `out[0..len]`, with
 * `len` at most `k`.
 */
KsyncStatus ksync_estimate_eigenvalues(const KsyncEstimate *est, double *out, size_t len);

void ksync_estimate_free(KsyncEstimate *est);

/**
 * `|⟨z, ẑ⟩|` between two angle vectors of length `n`.
 */
KsyncStatus ksync_correlation(const double *a, const double *b, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KSYNC_H */
