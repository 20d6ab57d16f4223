#ifndef SEMSENSE_H
#define SEMSENSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum SemStatus {
  SEM_STATUS_OK = 0,
  SEM_STATUS_NULL_POINTER = 1,
  SEM_STATUS_INVALID_ARGUMENT = 2,
  SEM_STATUS_BUFFER_TOO_SMALL = 3,
  SEM_STATUS_DEGENERATE_FIT = 4,
  SEM_STATUS_INVALID_CODE = 5,
  SEM_STATUS_INVALID_SPEC = 6,
  SEM_STATUS_INVALID_MARKET = 7,
  SEM_STATUS_NUMERICAL = 8,
  SEM_STATUS_INTERNAL = 9,
} SemStatus;

typedef enum SemFadingModel {
  SEM_FADING_MODEL_RAYLEIGH = 0,
  SEM_FADING_MODEL_NAKAGAMI = 1,
} SemFadingModel;

typedef enum SemModulation {
  SEM_MODULATION_BPSK = 0,
  SEM_MODULATION_BFSK_COHERENT = 1,
  SEM_MODULATION_DPSK = 2,
  SEM_MODULATION_ON_BFSK = 3,
} SemModulation;

// Opaque semantic code.
typedef struct SemCode SemCode;

// Opaque labelled training set for kNN classification.
typedef struct SemTrainingSet SemTrainingSet;

// Fading link with maximal-ratio combining over `n_branches` antennas.
// `nakagami_m` is ignored for Rayleigh.
typedef struct SemFading {
  enum SemFadingModel model;
  double nakagami_m;
  uint32_t n_branches;
  double mean_snr_db;
} SemFading;

// One sinusoidal basis `A·sin(2πft + θ)`.
typedef struct SemBasis {
  double amplitude;
  double frequency_hz;
  double phase_rad;
} SemBasis;

// Contest market. Transmitters are described by their data rate only;
// timing and payload sizes take the library defaults.
typedef struct SemMarket {
  uint32_t n_transmitters;
  uint32_t n_awards;
  double total_award;
  double delta_bps;
  bool risk_averse;
  bool use_semantic;
} SemMarket;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null.
//
// The pointer stays valid until the next call into the library on the
// same thread.
const char *sem_last_error_message(void);

// Release a string returned by the library.
//
// # Safety
// `s` must come from this library and not be freed twice.
void sem_string_free(char *s);

// Average bit error probability over the fading distribution.
//
// # Safety
// `fading` must be readable and `out` writable.
enum SemStatus sem_average_bep(const struct SemFading *fading,
                               enum SemModulation modulation,
                               double *out);

// Ergodic capacity in bit/s.
//
// # Safety
// `fading` must be readable and `out` writable.
enum SemStatus sem_ergodic_capacity(const struct SemFading *fading,
                                    double bandwidth_hz,
                                    double *out);

// Encode a single-subcarrier power trace with the default codec settings.
//
// # Safety
// `samples` must point to `len` values; `out` must be writable.
enum SemStatus sem_encode(const double *samples,
                          uintptr_t len,
                          double sample_rate_hz,
                          struct SemCode **out);

// # Safety
// `code` must be null or a live handle.
void sem_code_free(struct SemCode *code);

// Number of bases, or 0 for a null handle.
//
// # Safety
// `code` must be null or a live handle.
uintptr_t sem_code_order(const struct SemCode *code);

// # Safety
// `code` must be null or a live handle.
double sem_code_fit_nrmse(const struct SemCode *code);

// # Safety
// `code` must be null or a live handle.
double sem_code_mean_power(const struct SemCode *code);

// Bases are ordered by frequency.
//
// # Safety
// `code` must be a live handle and `out` writable.
enum SemStatus sem_code_basis(const struct SemCode *code, uintptr_t index, struct SemBasis *out);

// Payload size in bits.
//
// # Safety
// `code` must be null or a live handle.
uint64_t sem_code_payload_bits(const struct SemCode *code);

// Serialize the code as JSON; free the result with `sem_string_free`.
//
// # Safety
// `code` must be a live handle and `out` writable.
enum SemStatus sem_code_to_json(const struct SemCode *code, char **out);

// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum SemStatus sem_code_from_json(const char *json, struct SemCode **out);

// Write the binary payload into `buf`.
//
// `out_len` always receives the required size; pass a null `buf` to query
// it. Returns `BUFFER_TOO_SMALL` when `capacity` is short.
//
// # Safety
// `buf` must be null or hold `capacity` bytes; `out_len` must be writable.
enum SemStatus sem_code_payload(const struct SemCode *code,
                                uint8_t *buf,
                                uintptr_t capacity,
                                uintptr_t *out_len);

// Decode a possibly corrupted payload, dropping invalid bases.
//
// `out_dropped` (optional) receives the number of discarded bases. Fails
// with `INVALID_CODE` when nothing survives.
//
// # Safety
// `bytes` must hold `len` bytes; `out` writable; `out_dropped` null or writable.
enum SemStatus sem_code_from_payload(const uint8_t *bytes,
                                     uintptr_t len,
                                     struct SemCode **out,
                                     uintptr_t *out_dropped);

struct SemTrainingSet *sem_training_set_new(void);

// # Safety
// `ts` must be null or a live handle.
void sem_training_set_free(struct SemTrainingSet *ts);

// Add a labelled code; the code is copied.
//
// # Safety
// `ts` and `code` must be live handles; `label` NUL-terminated.
enum SemStatus sem_training_set_add(struct SemTrainingSet *ts,
                                    const struct SemCode *code,
                                    const char *label);

// # Safety
// `ts` must be null or a live handle.
uintptr_t sem_training_set_len(const struct SemTrainingSet *ts);

// kNN label of `code`; free the result with `sem_string_free`.
//
// # Safety
// `ts` and `code` must be live handles; `out` writable.
enum SemStatus sem_classify(struct SemTrainingSet *ts,
                            const struct SemCode *code,
                            uintptr_t k,
                            uint64_t seed,
                            char **out);

struct SemMarket sem_market_default(void);

// Contest capability of a transmitter with the given data rate.
//
// # Safety
// `market` must be readable and `out` writable.
enum SemStatus sem_capability(const struct SemMarket *market, double data_rate_bps, double *out);

// Equilibrium effort under the prize vector `prizes` (best first).
//
// # Safety
// `market` readable, `prizes` holding `n_prizes` values, `out` writable.
enum SemStatus sem_optimal_effort(const struct SemMarket *market,
                                  double data_rate_bps,
                                  const double *prizes,
                                  uintptr_t n_prizes,
                                  double *out);

// Effort-maximizing prize vector for `n_transmitters` data rates.
//
// Writes `n_awards` prizes into `out_prizes`.
//
// # Safety
// `market` readable, `rates` holding `n_rates` values, `out_prizes`
// holding `capacity` values.
enum SemStatus sem_optimal_awards(const struct SemMarket *market,
                                  const double *rates,
                                  uintptr_t n_rates,
                                  double *out_prizes,
                                  uintptr_t capacity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEMSENSE_H */
