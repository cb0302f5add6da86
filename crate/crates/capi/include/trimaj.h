#ifndef TRIMAJ_H
#define TRIMAJ_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum {
  TRIMAJ_STATUS_OK = 0,
  TRIMAJ_STATUS_NULL_POINTER = 1,
  TRIMAJ_STATUS_INVALID_ARGUMENT = 2,
  TRIMAJ_STATUS_INVALID_UTF8 = 3,
  TRIMAJ_STATUS_PARSE_ERROR = 4,
  TRIMAJ_STATUS_RUN_FAILED = 5,
  TRIMAJ_STATUS_BUFFER_TOO_SMALL = 6,
} TrimajStatus;

/**
 * Terminal states of a trial.
 */
typedef enum {
  TRIMAJ_TERMINAL_STRICT_CONSENSUS = 0,
  TRIMAJ_TERMINAL_ALMOST_CONSENSUS = 1,
  TRIMAJ_TERMINAL_MAX_ROUNDS_EXCEEDED = 2,
} TrimajTerminal;

/**
 * Opaque simulator handle: one experiment cell plus its master seed.
 */
typedef struct TrimajSimulator TrimajSimulator;

/**
 * Verdict of one trial.
 */
typedef struct {
  uint64_t rounds;
  TrimajTerminal terminal;
  /**
   * Winning opinion id, or -1 when the run was censored.
   */
  int64_t winner;
  /**
   * 1 when the winner was active in the initial configuration.
   */
  uint8_t winner_valid;
  /**
   * Nodes not on the leading opinion at the final round.
   */
  uint64_t residual;
  /**
   * Small-opinion closure violations observed over the trajectory.
   */
  uint64_t violations;
  /**
   * First round the adversary's non-valid target had zero support after
   * being active, or -1 if that never happened.
   */
  int64_t target_extinction_round;
} TrimajOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the library version as a static NUL-terminated string.
 */
const char *trimaj_version(void);

/**
 * Returns the last error message recorded on this thread, or NULL. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *trimaj_last_error(void);

/**
 * Creates a simulator for one `(n, k)` cell.
 *
 * `adversary_kind` may be NULL (meaning "null") or one of: "null",
 * "static-plant", "dynamic-sustain", "dynamic-balance-big",
 * "dynamic-feed-min-big", "dynamic-random". `target < 0` means no target.
 * `gamma` and `c_stop` must be positive; `max_rounds = 0` selects the
 * default budget derived from `(n, k)`.
 *
 * # Safety
 * `out` must be a valid pointer. `adversary_kind`, when non-NULL, must be a
 * NUL-terminated string.
 */
TrimajStatus trimaj_simulator_new(uint64_t n,
                                  uint32_t k,
                                  uint64_t seed,
                                  const char *adversary_kind,
                                  uint64_t budget,
                                  int64_t target,
                                  double gamma,
                                  double c_stop,
                                  uint64_t max_rounds,
                                  TrimajSimulator **out);

/**
 * Runs one deterministic trial; the same `(seed, trial)` always produces
 * the same outcome.
 *
 * # Safety
 * `simulator` must be a live handle from [`trimaj_simulator_new`] and
 * `outcome` a valid pointer.
 */
TrimajStatus trimaj_simulator_run(const TrimajSimulator *simulator,
                                  uint64_t trial,
                                  TrimajOutcome *outcome);

/**
 * Releases a simulator handle. NULL is a no-op.
 *
 * # Safety
 * `simulator` must be NULL or a handle from [`trimaj_simulator_new`] that
 * has not been freed yet.
 */
void trimaj_simulator_free(TrimajSimulator *simulator);

/**
 * Computes the per-node adoption distribution of a configuration given in
 * canonical text form `n=<int>;<id>:<count>,...`. Writes up to `capacity`
 * `(id, probability)` pairs in ascending id order and stores the active
 * count in `written`; returns `BufferTooSmall` (with `written` set) when
 * `capacity` does not cover the active set.
 *
 * # Safety
 * `config` must be NUL-terminated; `ids` and `probs` must point to at
 * least `capacity` elements; `written` must be valid.
 */
TrimajStatus trimaj_adoption_probabilities(const char *config,
                                           uint32_t *ids,
                                           double *probs,
                                           uintptr_t capacity,
                                           uintptr_t *written);

/**
 * Dynamic-adversary budget `floor(beta sqrt(n) / (k^{5/2} ln n))`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
TrimajStatus trimaj_f_dynamic_bound(uint64_t n, uint32_t k, double beta, uint64_t *out);

/**
 * Static-adversary budget `floor(n/k - sqrt(k n ln n))`; fails with
 * `InvalidArgument` when the regime is too small for a positive bound.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
TrimajStatus trimaj_f_static_bound(uint64_t n, uint32_t k, uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRIMAJ_H */
