#ifndef TRITANGLE_H
#define TRITANGLE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TtStatus {
  TT_STATUS_OK = 0,
  TT_STATUS_INVALID_ARGUMENT = 1,
  TT_STATUS_CONFIG = 2,
  TT_STATUS_NUMERICAL = 3,
  TT_STATUS_SYMMETRY_MISMATCH = 4,
  TT_STATUS_PANIC = 5,
} TtStatus;

typedef enum TtFamily {
  TT_FAMILY_GI = 0,
  TT_FAMILY_GW = 1,
  TT_FAMILY_GWI = 2,
} TtFamily;

typedef enum TtBasis {
  TT_BASIS_GI = 0,
  TT_BASIS_GW = 1,
} TtBasis;

typedef enum TtVerdict {
  TT_VERDICT_GLOBAL = 0,
  TT_VERDICT_LOCAL = 1,
  TT_VERDICT_INCONCLUSIVE = 2,
} TtVerdict;

// Density matrix.
typedef struct TtState TtState;

// Optimized witness together with its basis.
typedef struct TtWitness TtWitness;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until
// the next failing call on the same thread.
const char *tt_last_error(void);

// Member of a built-in family; `p` is ignored for `GI`, `q` for `GW`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum TtStatus tt_state_family(enum TtFamily family, double p, double q, struct TtState **out);

// Density matrix from `2 * dim * dim` doubles: row-major `(re, im)` pairs.
//
// # Safety
// `data` must point to `2 * dim * dim` readable doubles and `out` to
// writable storage for one handle.
enum TtStatus tt_state_from_matrix(const double *data, uintptr_t dim, struct TtState **out);

// # Safety
// `state` must be null or a handle from this library, not yet freed.
void tt_state_free(struct TtState *state);

// Maximize the witness for `state` in `basis` with coordinate bound
// `k_bound` (published convention) and RNG `seed`.
//
// # Safety
// `state` must be a live handle and `out` valid writable storage.
enum TtStatus tt_maximize_witness(const struct TtState *state,
                                  enum TtBasis basis,
                                  double k_bound,
                                  uint64_t seed,
                                  struct TtWitness **out);

// # Safety
// `w` must be null or a handle from this library, not yet freed.
void tt_witness_free(struct TtWitness *w);

// Certified lower bound `<v, r> - mu_Pi`.
//
// # Safety
// `w` must be a live handle and `out` writable.
enum TtStatus tt_witness_g_value(const struct TtWitness *w, double *out);

// # Safety
// As [`tt_witness_g_value`].
enum TtStatus tt_witness_d_min(const struct TtWitness *w, double *out);

// # Safety
// As [`tt_witness_g_value`].
enum TtStatus tt_witness_mu_pi(const struct TtWitness *w, double *out);

// Number of witness coordinates.
//
// # Safety
// `w` must be null or a live handle.
uintptr_t tt_witness_len(const struct TtWitness *w);

// Copy the coordinates of `Pi` (published convention) into `buf`.
//
// # Safety
// `buf` must hold `len` writable doubles.
enum TtStatus tt_witness_coords(const struct TtWitness *w, double *buf, uintptr_t len);

// Verdict of the convex-hull certificate at `threshold`.
//
// # Safety
// `w` must be a live handle and `out` writable.
enum TtStatus tt_certify(const struct TtWitness *w, double threshold, enum TtVerdict *out);

// Upper bound from `starts` decomposition searches.
//
// # Safety
// `state` must be a live handle and `out` writable.
enum TtStatus tt_oracle_upper(const struct TtState *state,
                              uintptr_t starts,
                              uint64_t seed,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRITANGLE_H */
