#ifndef DENSE_CODING_H
#define DENSE_CODING_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result of a library call.
typedef enum DcStatus {
  DC_STATUS_OK = 0,
  // A required pointer argument was null.
  DC_STATUS_NULL_POINTER = 1,
  DC_STATUS_INVALID_ARGUMENT = 2,
  // The search or construction gave a negative result.
  DC_STATUS_INFEASIBLE = 3,
  DC_STATUS_VERIFICATION_FAILED = 4,
  // Malformed JSON, unsupported format version or invalid UTF-8.
  DC_STATUS_FORMAT = 5,
  DC_STATUS_IO = 6,
  // A Rust panic was caught at the boundary.
  DC_STATUS_INTERNAL = 7,
} DcStatus;

// Encoding mode for `dc_search`.
typedef enum DcMode {
  DC_MODE_UNITARY = 0,
  DC_MODE_GENERAL = 1,
} DcMode;

// Opaque message set.
typedef struct DcMessageSet DcMessageSet;

// Search settings; obtain defaults from `dc_search_options_default`.
typedef struct DcSearchOptions {
  size_t restarts;
  uint64_t seed;
  double success_tol;
  size_t max_iterations;
  size_t max_kappa;
} DcSearchOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next failing call on the same thread; do not free.
const char *dc_last_error(void);

// Library version as a static string.
const char *dc_version(void);

struct DcSearchOptions dc_search_options_default(void);

// Search for `n_messages` messages at the spectrum `lambdas[0..dim]`.
//
// With `kappas` non-null only that rank profile (`n_messages` entries) is
// searched; otherwise every profile allowed by `mode`. On `Ok` `*out`
// receives a new handle; on `Infeasible` it is set to null. `best_cost`
// may be null.
//
// # Safety
// Pointers must be valid for the stated lengths.
enum DcStatus dc_search(size_t dim,
                        const double *lambdas,
                        size_t n_messages,
                        enum DcMode mode,
                        const size_t *kappas,
                        const struct DcSearchOptions *options,
                        struct DcMessageSet **out,
                        double *best_cost);

// Parse a message-set JSON document.
//
// # Safety
// `json` must be a nul-terminated string; `out` must be writable.
enum DcStatus dc_message_set_from_json(const char *json, struct DcMessageSet **out);

// Serialize a message set; free the result with `dc_string_free`.
//
// # Safety
// `set` must be a live handle; `out` must be writable.
enum DcStatus dc_message_set_to_json(const struct DcMessageSet *set, char **out);

// # Safety
// `set` must be null or a handle not yet freed.
void dc_message_set_free(struct DcMessageSet *set);

// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void dc_string_free(char *s);

// Number of messages, or 0 for a null handle.
//
// # Safety
// `set` must be null or a live handle.
size_t dc_message_set_len(const struct DcMessageSet *set);

// Local dimension, or 0 for a null handle.
//
// # Safety
// `set` must be null or a live handle.
size_t dc_message_set_dim(const struct DcMessageSet *set);

// Kraus rank of message `j`, or 0 when out of range.
//
// # Safety
// `set` must be null or a live handle.
size_t dc_message_set_kraus_rank(const struct DcMessageSet *set, size_t j);

// Orthogonality cost of the set.
//
// # Safety
// `set` must be a live handle; `cost` must be writable.
enum DcStatus dc_message_set_cost(const struct DcMessageSet *set, double *cost);

// Verify at `tol`; `Ok` on pass, `VerificationFailed` otherwise. The
// largest violation is stored in `max_violation` when it is non-null.
//
// # Safety
// `set` must be a live handle; `max_violation` null or writable.
enum DcStatus dc_verify(const struct DcMessageSet *set, double tol, double *max_violation);

// Run `trials` seeded protocol trials; `accuracy` receives the fraction
// decoded with certainty.
//
// # Safety
// `set` must be a live handle; `accuracy` must be writable.
enum DcStatus dc_simulate(const struct DcMessageSet *set,
                          size_t trials,
                          uint64_t seed,
                          double *accuracy);

// Slack `4 - (1-3x)/x²` of the ninth-unitary certificate; `feasible` is
// set to 1 when it is non-negative.
//
// # Safety
// Output pointers must be writable.
enum DcStatus dc_ninth_certificate(double x, double *slack, int32_t *feasible);

// Obstruction gap `λ₀/λ₁ - λ₁/λ₀` for a third two-qubit message.
//
// # Safety
// `gap` must be writable.
enum DcStatus dc_qubit_no_go(double lambda0, double *gap);

// The eight-unitary block set at edge-E ratio `x`, with identity dressings
// and `β₂` phases `phase_diag`, `phase_anti`.
//
// # Safety
// `out` must be writable.
enum DcStatus dc_block_set(double x,
                           double phase_diag,
                           double phase_anti,
                           struct DcMessageSet **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DENSE_CODING_H */
