#ifndef PAC_FFI_H
#define PAC_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum PacError {
  PAC_ERROR_OK = 0,
  PAC_ERROR_NULL_POINTER = 1,
  PAC_ERROR_INVALID_ARGUMENT = 2,
  PAC_ERROR_PARSE = 3,
  PAC_ERROR_OUT_OF_RANGE = 4,
  PAC_ERROR_NUMERIC = 5,
  PAC_ERROR_OVERFLOW = 6,
  PAC_ERROR_PANIC = 7,
} PacError;

typedef enum PacMode {
  PAC_MODE_STANDARD = 0,
  PAC_MODE_BOOLEAN = 1,
  PAC_MODE_PELEG = 2,
} PacMode;

typedef enum PacStatusKind {
  PAC_STATUS_KIND_CONVERGED = 0,
  PAC_STATUS_KIND_MAX_ITER_REACHED = 1,
  PAC_STATUS_KIND_OSCILLATING = 2,
  PAC_STATUS_KIND_WIPEOUT = 3,
} PacStatusKind;

typedef enum PacOutcome {
  PAC_OUTCOME_SOLUTION = 0,
  PAC_OUTCOME_UNSATISFIABLE = 1,
  PAC_OUTCOME_LIMIT_REACHED = 2,
} PacOutcome;

/**
 * Beliefs and status of one propagation run.
 */
typedef struct PacBeliefs PacBeliefs;

/**
 * A validated binary CSP.
 */
typedef struct PacInstance PacInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (always
 * NUL-terminated when `len > 0`). Returns the full message length in bytes,
 * excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t pac_last_error(char *buf, uintptr_t len);

/**
 * Parses an instance from the text format.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum PacError pac_instance_parse(const char *text, struct PacInstance **out);

/**
 * Generates a random instance over `n` variables with `m` values each.
 *
 * # Safety
 * `out` must be writable.
 */
enum PacError pac_instance_generate(uintptr_t n,
                                    uintptr_t m,
                                    double p1,
                                    double p2,
                                    uint64_t seed,
                                    struct PacInstance **out);

/**
 * # Safety
 * `inst` must be null or come from this library and not be freed twice.
 */
void pac_instance_free(struct PacInstance *inst);

/**
 * Number of variables, or 0 for a null instance.
 *
 * # Safety
 * `inst` must be null or a live instance.
 */
uintptr_t pac_instance_num_vars(const struct PacInstance *inst);

/**
 * Domain size of `var`, or 0 when out of range.
 *
 * # Safety
 * `inst` must be null or a live instance.
 */
uintptr_t pac_instance_domain_size(const struct PacInstance *inst, uintptr_t var);

/**
 * Runs propagation from unit messages.
 *
 * # Safety
 * `inst` must be a live instance; `out` must be writable.
 */
enum PacError pac_propagate(const struct PacInstance *inst,
                            double epsilon,
                            uintptr_t max_iter,
                            enum PacMode mode,
                            struct PacBeliefs **out);

/**
 * Final status and the index of the last round.
 *
 * # Safety
 * `res` must be a live result; `kind` and `iterations` must be writable.
 */
enum PacError pac_beliefs_status(const struct PacBeliefs *res,
                                 enum PacStatusKind *kind,
                                 uintptr_t *iterations);

/**
 * Belief that `var` takes `value`.
 *
 * # Safety
 * `res` must be a live result; `out` must be writable.
 */
enum PacError pac_beliefs_get(const struct PacBeliefs *res,
                              uintptr_t var,
                              uintptr_t value,
                              double *out);

/**
 * # Safety
 * `res` must be null or come from this library and not be freed twice.
 */
void pac_beliefs_free(struct PacBeliefs *res);

/**
 * Runs AC-3. `live` receives one byte per (variable, value) pair in
 * variable-major order, 1 for surviving values; `len` must equal the total
 * number of values. `wipeout` is set to 1 when some domain empties.
 *
 * # Safety
 * `inst` must be a live instance; `live` must point to `len` writable
 * bytes; `wipeout` must be writable.
 */
enum PacError pac_ac3(const struct PacInstance *inst,
                      uint8_t *live,
                      uintptr_t len,
                      int32_t *wipeout);

/**
 * Counts solutions, stopping after `cap` when `cap > 0`. `truncated` is set
 * to 1 when the cap was hit.
 *
 * # Safety
 * `inst` must be a live instance; `total` and `truncated` must be writable.
 */
enum PacError pac_count(const struct PacInstance *inst,
                        uint64_t cap,
                        uint64_t *total,
                        int32_t *truncated);

/**
 * Backtracking search with a named heuristic (`lex`, `random`,
 * `first-fail`, `brelaz`, `peleg`, `<method>-static`, `<method>-dynamic`).
 * `max_backtracks == 0` means unlimited. On a solution, `assignment`
 * receives one value per variable.
 *
 * # Safety
 * `inst` must be a live instance; `heuristic` a NUL-terminated string;
 * `assignment` must point to `len` writable entries; `outcome` and
 * `backtracks` must be writable.
 */
enum PacError pac_solve(const struct PacInstance *inst,
                        const char *heuristic,
                        uint64_t seed,
                        uint64_t max_backtracks,
                        uintptr_t *assignment,
                        uintptr_t len,
                        enum PacOutcome *outcome,
                        uint64_t *backtracks);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PAC_FFI_H */
