#ifndef QSIM_H
#define QSIM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum QsimStatus {
  QSIM_STATUS_OK = 0,
  QSIM_STATUS_NULL_POINTER = 1,
  QSIM_STATUS_INVALID_ARGUMENT = 2,
  QSIM_STATUS_CAPACITY = 3,
  QSIM_STATUS_PARSE = 4,
  QSIM_STATUS_SIZE_MISMATCH = 5,
  QSIM_STATUS_RUNTIME = 6,
  QSIM_STATUS_PANIC = 7,
} QsimStatus;

/**
 * Opaque gate sequence.
 */
typedef struct QsimCircuit QsimCircuit;

/**
 * Opaque Pauli-string sum.
 */
typedef struct QsimPauliSum QsimPauliSum;

/**
 * Opaque state vector.
 */
typedef struct QsimState QsimState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. Valid until the next
 * failing call on the same thread; empty when nothing has failed.
 */
const char *qsim_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qsim_version(void);

/**
 * Allocates the basis state `|occupied>` on `num_qubits` qubits.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum QsimStatus qsim_state_new(size_t num_qubits, uint64_t occupied, struct QsimState **out);

/**
 * # Safety
 * `state` must be null or a handle from [`qsim_state_new`] not yet freed.
 */
void qsim_state_free(struct QsimState *state);

/**
 * Qubit count, or 0 for a null handle.
 *
 * # Safety
 * `state` must be null or a live handle.
 */
size_t qsim_state_num_qubits(const struct QsimState *state);

/**
 * Reads amplitude `index`.
 *
 * # Safety
 * `state` must be a live handle; `re` and `im` writable doubles.
 */
enum QsimStatus qsim_state_amplitude(const struct QsimState *state,
                                     uint64_t index,
                                     double *re,
                                     double *im);

/**
 * Squared norm.
 *
 * # Safety
 * `state` must be a live handle; `out` a writable double.
 */
enum QsimStatus qsim_state_norm_sqr(const struct QsimState *state, double *out);

/**
 * Parses the circuit text format. `reference_out` receives the file's
 * reference state, or 0 when it declares none.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` and `reference_out` writable.
 */
enum QsimStatus qsim_circuit_parse(const char *text,
                                   struct QsimCircuit **out,
                                   uint64_t *reference_out);

/**
 * Builds a UCC circuit from an amplitude file. `mapping` is 0 for
 * Jordan-Wigner and 1 for Bravyi-Kitaev.
 *
 * # Safety
 * `amplitudes` must be a NUL-terminated string; `out` and `reference_out` writable.
 */
enum QsimStatus qsim_ucc_circuit(const char *amplitudes,
                                 uint32_t mapping,
                                 size_t eta,
                                 struct QsimCircuit **out,
                                 uint64_t *reference_out);

/**
 * # Safety
 * `circuit` must be null or a live handle.
 */
void qsim_circuit_free(struct QsimCircuit *circuit);

/**
 * Gate count, or 0 for a null handle.
 *
 * # Safety
 * `circuit` must be null or a live handle.
 */
size_t qsim_circuit_gate_count(const struct QsimCircuit *circuit);

/**
 * Qubit count, or 0 for a null handle.
 *
 * # Safety
 * `circuit` must be null or a live handle.
 */
size_t qsim_circuit_num_qubits(const struct QsimCircuit *circuit);

/**
 * Applies every gate of `circuit` to `state` without noise.
 *
 * # Safety
 * Both handles must be live.
 */
enum QsimStatus qsim_state_apply_circuit(struct QsimState *state,
                                         const struct QsimCircuit *circuit);

/**
 * Parses the Pauli-sum text format.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` writable.
 */
enum QsimStatus qsim_pauli_sum_parse(const char *text, struct QsimPauliSum **out);

/**
 * # Safety
 * `sum` must be null or a live handle.
 */
void qsim_pauli_sum_free(struct QsimPauliSum *sum);

/**
 * Real part of `<state| sum |state>`.
 *
 * # Safety
 * Both handles must be live; `out` writable.
 */
enum QsimStatus qsim_state_expectation(const struct QsimState *state,
                                       const struct QsimPauliSum *sum,
                                       double *out);

/**
 * Trajectory mean and standard error of `observable` after `circuit` runs
 * from its reference state under noise with coherence parameters `m1`, `m2`
 * (infinity disables a channel).
 *
 * # Safety
 * Handles must be live; `mean` and `std_error` writable.
 */
enum QsimStatus qsim_run_trajectories(const struct QsimCircuit *circuit,
                                      const struct QsimPauliSum *observable,
                                      double m1,
                                      double m2,
                                      size_t trajectories,
                                      uint64_t seed,
                                      double *mean,
                                      double *std_error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QSIM_H */
