#ifndef SAROP_H
#define SAROP_H

/* Generated by cbindgen. Do not edit. */

#include <stddef.h>
#include <stdint.h>

#define SAROP_METHOD_KKT 0

#define SAROP_METHOD_LAGRANGE_ALL 1

#define SAROP_METHOD_LAGRANGE_RELEVANT 2

/*
 Result code of every fallible call.
 */
typedef enum SaropStatus {
  SAROP_STATUS_OK = 0,
  SAROP_STATUS_NULL_POINTER = 1,
  SAROP_STATUS_INVALID_INPUT = 2,
  SAROP_STATUS_PARSE_ERROR = 3,
  SAROP_STATUS_SOLVER_FAILURE = 4,
  SAROP_STATUS_BUDGET_EXCEEDED = 5,
  SAROP_STATUS_INTERNAL = 6,
} SaropStatus;

/*
 Opaque POMDP instance.
 */
typedef struct SaropPomdp SaropPomdp;

/*
 Opaque solve report.
 */
typedef struct SaropReport SaropReport;

/*
 Component counts and degree bounds of one instance shape.
 */
typedef struct SaropBoundSummary {
  uint64_t total_components;
  uint64_t relevant_components;
  uint64_t total_bound;
  uint64_t relevant_bound;
} SaropBoundSummary;

/*
 Message of the last failed call on this thread, or null. The pointer is
 valid until the next call into this library on the same thread.
 */
const char *sarop_last_error_message(void);

/*
 Parses an instance from a NUL-terminated JSON string and validates it.

 # Safety
 `json` must be a valid C string and `out` a valid pointer.
 */
enum SaropStatus sarop_pomdp_from_json(const char *json, struct SaropPomdp **out);

/*
 Generates a random instance with the given fiber sizes.

 # Safety
 `fibers` must point to `n_fibers` values and `out` must be valid.
 */
enum SaropStatus sarop_pomdp_random(uintptr_t n_actions,
                                    const uintptr_t *fibers,
                                    uintptr_t n_fibers,
                                    uint64_t seed,
                                    double discount,
                                    struct SaropPomdp **out);

/*
 Releases an instance; null is ignored.

 # Safety
 `pomdp` must come from this library and not be used afterwards.
 */
void sarop_pomdp_free(struct SaropPomdp *pomdp);

/*
 Numbers of states, actions and observations.

 # Safety
 All pointers must be valid.
 */
enum SaropStatus sarop_pomdp_dims(const struct SaropPomdp *pomdp,
                                  uintptr_t *n_states,
                                  uintptr_t *n_actions,
                                  uintptr_t *n_observations);

/*
 Expected discounted reward of a policy given column by column
 (`policy[o * n_actions + a]`).

 # Safety
 `policy` must point to `len` values and `out` must be valid.
 */
enum SaropStatus sarop_reward_value(const struct SaropPomdp *pomdp,
                                    const double *policy,
                                    uintptr_t len,
                                    double *out);

/*
 State-action frequencies of a policy, written to `eta[s * n_actions + a]`.

 # Safety
 `policy` must point to `len` values and `eta` to `eta_len` writable values.
 */
enum SaropStatus sarop_phi(const struct SaropPomdp *pomdp,
                           const double *policy,
                           uintptr_t len,
                           double *eta,
                           uintptr_t eta_len);

/*
 Boundary component counts and degree bounds for `n_actions` actions and
 the given fiber sizes.

 # Safety
 `fibers` must point to `n_fibers` values and `out` must be valid.
 */
enum SaropStatus sarop_bound_summary(uintptr_t n_actions,
                                     const uintptr_t *fibers,
                                     uintptr_t n_fibers,
                                     struct SaropBoundSummary *out);

/*
 Solves an instance with one of the `SAROP_METHOD_*` methods. A zero
 `budget` keeps the default path budget.

 # Safety
 `pomdp` must be a live handle and `out` a valid pointer.
 */
enum SaropStatus sarop_solve(const struct SaropPomdp *pomdp,
                             uint32_t method,
                             uint64_t gamma_seed,
                             uint64_t budget,
                             struct SaropReport **out);

/*
 Releases a report; null is ignored.

 # Safety
 `report` must come from this library and not be used afterwards.
 */
void sarop_report_free(struct SaropReport *report);

/*
 Best reward found.

 # Safety
 Pointers must be valid.
 */
enum SaropStatus sarop_report_best_value(const struct SaropReport *report, double *out);

/*
 Complex, real and positive solution counts.

 # Safety
 Pointers must be valid.
 */
enum SaropStatus sarop_report_counts(const struct SaropReport *report,
                                     uintptr_t *complex,
                                     uintptr_t *real,
                                     uintptr_t *positive);

/*
 Copies the best policy (`n_actions * n_observations` entries, column by
 column) into `out`.

 # Safety
 `out` must point to `len` writable values.
 */
enum SaropStatus sarop_report_best_policy(const struct SaropReport *report,
                                          double *out,
                                          uintptr_t len);

/*
 Copies the best state-action frequencies into `out`.

 # Safety
 `out` must point to `len` writable values.
 */
enum SaropStatus sarop_report_best_eta(const struct SaropReport *report,
                                       double *out,
                                       uintptr_t len);

/*
 Serializes a report as JSON. Release the string with [`sarop_string_free`].

 # Safety
 Pointers must be valid.
 */
enum SaropStatus sarop_report_to_json(const struct SaropReport *report, char **out);

/*
 Releases a string returned by this library; null is ignored.

 # Safety
 `s` must come from this library and not be used afterwards.
 */
void sarop_string_free(char *s);

#endif  /* SAROP_H */
