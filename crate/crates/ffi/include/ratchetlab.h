#ifndef RATCHETLAB_H
#define RATCHETLAB_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum RlStatus {
  RL_STATUS_OK = 0,
  RL_STATUS_NULL_POINTER = 1,
  RL_STATUS_INVALID_UTF8 = 2,
  RL_STATUS_INVALID_INPUT = 3,
  RL_STATUS_PRECONDITION = 4,
  RL_STATUS_INTERNAL = 5,
  RL_STATUS_BUFFER_TOO_SMALL = 6,
  RL_STATUS_PANIC = 7,
} RlStatus;

/**
 * Opaque classical machine.
 */
typedef struct RlMachine RlMachine;

/**
 * Opaque q-machine.
 */
typedef struct RlQMachine RlQMachine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into this library on the same thread.
 */
const char *rl_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rl_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void rl_string_free(char *s);

/**
 * Parses and validates a machine from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum RlStatus rl_machine_from_json(const char *json, struct RlMachine **out_machine);

/**
 * Releases a machine handle. NULL is ignored.
 *
 * # Safety
 * `machine` must be NULL or a handle from this library not yet freed.
 */
void rl_machine_free(struct RlMachine *machine);

/**
 * Serializes a machine to JSON; free the result with [`rl_string_free`].
 *
 * # Safety
 * `machine` must be a live handle; `out_json` must be valid for writes.
 */
enum RlStatus rl_machine_to_json(const struct RlMachine *machine, char **out_json);

/**
 * Number of states and symbols.
 *
 * # Safety
 * `machine` must be a live handle; out-pointers must be valid for writes.
 */
enum RlStatus rl_machine_shape(const struct RlMachine *machine,
                               size_t *out_states,
                               size_t *out_symbols);

/**
 * Writes the stationary distribution into `buf` (state order of the file).
 * `written` (optional) receives the required length.
 *
 * # Safety
 * `machine` must be a live handle; `buf` must hold `len` doubles.
 */
enum RlStatus rl_machine_stationary(const struct RlMachine *machine,
                                    double *buf,
                                    size_t len,
                                    size_t *written);

/**
 * Probability of a word given as concatenated single-character symbols or
 * whitespace-separated symbol labels.
 *
 * # Safety
 * `machine` must be a live handle; `word` NUL-terminated; `out_prob` writable.
 */
enum RlStatus rl_machine_word_probability(const struct RlMachine *machine,
                                          const char *word,
                                          double *out_prob);

/**
 * Time reversal of a machine as a new handle.
 *
 * # Safety
 * `machine` must be a live handle; `out_machine` writable.
 */
enum RlStatus rl_machine_time_reverse(const struct RlMachine *machine,
                                      struct RlMachine **out_machine);

/**
 * Forward (`reverse == false`) or reverse epsilon-machine as a new handle.
 * Enumeration caps follow the `RATCHETLAB_CAP` environment variable.
 *
 * # Safety
 * `machine` must be a live handle; `out_machine` writable.
 */
enum RlStatus rl_machine_epsilon_machine(const struct RlMachine *machine,
                                         bool reverse,
                                         struct RlMachine **out_machine);

/**
 * Structural efficiency verdict of the classical classifier.
 *
 * # Safety
 * `machine` must be a live handle; `out_efficient` writable.
 */
enum RlStatus rl_machine_classify(const struct RlMachine *machine, bool *out_efficient);

/**
 * Classical locality dissipation in bits for `t = 1..=t_max`.
 *
 * # Safety
 * `machine` must be a live handle; `buf` must hold `len` doubles.
 */
enum RlStatus rl_machine_dissipation(const struct RlMachine *machine,
                                     size_t t_max,
                                     double *buf,
                                     size_t len,
                                     size_t *written);

/**
 * Entropy rate in bits per symbol.
 *
 * # Safety
 * `machine` must be a live handle; `out_rate` writable.
 */
enum RlStatus rl_machine_entropy_rate(const struct RlMachine *machine, double *out_rate);

/**
 * Builds a forward (`reverse == false`) or reverse q-machine. `phases` is
 * NULL for all-zero phases, otherwise `num_symbols * num_states` values in
 * symbol-major order.
 *
 * # Safety
 * `machine` must be a live handle; `phases` NULL or holding `phases_len`
 * doubles; `out_qmachine` writable.
 */
enum RlStatus rl_qmachine_build(const struct RlMachine *machine,
                                bool reverse,
                                const double *phases,
                                size_t phases_len,
                                struct RlQMachine **out_qmachine);

/**
 * Loads and revalidates a q-machine from JSON.
 *
 * # Safety
 * `json` must be NUL-terminated; `out_qmachine` writable.
 */
enum RlStatus rl_qmachine_from_json(const char *json, struct RlQMachine **out_qmachine);

/**
 * Serializes a q-machine to JSON; free the result with [`rl_string_free`].
 *
 * # Safety
 * `qmachine` must be a live handle; `out_json` writable.
 */
enum RlStatus rl_qmachine_to_json(const struct RlQMachine *qmachine, char **out_json);

/**
 * Releases a q-machine handle. NULL is ignored.
 *
 * # Safety
 * `qmachine` must be NULL or a handle from this library not yet freed.
 */
void rl_qmachine_free(struct RlQMachine *qmachine);

/**
 * Memory dimension `d`.
 *
 * # Safety
 * `qmachine` must be a live handle; `out_dim` writable.
 */
enum RlStatus rl_qmachine_dim(const struct RlQMachine *qmachine, size_t *out_dim);

/**
 * `Tr[K^w rho K^w^dagger]` for a word in the source alphabet.
 *
 * # Safety
 * `qmachine` must be a live handle; `word` NUL-terminated; `out_prob` writable.
 */
enum RlStatus rl_qmachine_word_probability(const struct RlQMachine *qmachine,
                                           const char *word,
                                           double *out_prob);

/**
 * Quantum locality dissipation in bits for `t = 1..=t_max`.
 *
 * # Safety
 * `qmachine` must be a live handle; `buf` must hold `len` doubles.
 */
enum RlStatus rl_qmachine_dissipation(const struct RlQMachine *qmachine,
                                      size_t t_max,
                                      double *buf,
                                      size_t len,
                                      size_t *written);

/**
 * Efficiency verdict of the theorem checker matching the q-machine's kind;
 * `t_check` is the cross-check horizon (0 disables it).
 *
 * # Safety
 * `qmachine` must be a live handle; `out_efficient` writable.
 */
enum RlStatus rl_qmachine_check(const struct RlQMachine *qmachine,
                                size_t t_check,
                                bool *out_efficient);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RATCHETLAB_H */
