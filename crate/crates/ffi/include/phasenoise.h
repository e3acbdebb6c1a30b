#ifndef PHASENOISE_H
#define PHASENOISE_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define PN_MODEL_MULTISAMPLE_TRUE 0

#define PN_MODEL_MULTISAMPLE_APPROX 1

#define PN_MODEL_MATCHED_FILTER 2

#define PN_MODEL_BAUD_RATE 3

/**
 * Symbol-rate receiver with a trained phase law (rate estimation only).
 */
#define PN_MODEL_MTR 4

#define PN_ALPHA_SNR_DELTA 0

#define PN_ALPHA_OPTIMAL 1

typedef enum PnStatus {
  PN_STATUS_OK = 0,
  PN_STATUS_NULL_POINTER = 1,
  PN_STATUS_INVALID_ARGUMENT = 2,
  PN_STATUS_LENGTH = 3,
  PN_STATUS_DOMAIN = 4,
  PN_STATUS_NUMERICAL = 5,
  PN_STATUS_RESOURCE = 6,
  PN_STATUS_CONFIG = 7,
  PN_STATUS_IO = 8,
  PN_STATUS_FORMAT = 9,
  PN_STATUS_PANIC = 10,
} PnStatus;

/**
 * Channel parameters, transmit pulse and constellation.
 */
typedef struct PnChannel PnChannel;

/**
 * One simulated sequence.
 */
typedef struct PnObservation PnObservation;

typedef struct PnRate {
  double rate_bits;
  double std_error;
} PnRate;

typedef struct PnMoments {
  double ef1;
  double ef1_sq;
  double ef1_4;
  double var_f1sq;
  double eg;
  double var_g;
  double ms_g_minus_1;
} PnMoments;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `cap`). Returns the full message length, 0 if
 * there is none.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t pn_last_error_message(char *buf, size_t cap);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pn_version(void);

/**
 * Creates a channel with unit symbol time and unit power.
 *
 * `fhwhm_ts` is the half-width linewidth times Ts. `pulse` is "square" or
 * "cos2"; `constellation` is "qpsk", "16qam" or "<M>psk".
 *
 * # Safety
 * `pulse` and `constellation` must be NUL-terminated strings; `out` must be
 * a valid pointer. On success `*out` owns a handle for [`pn_channel_free`].
 */
enum PnStatus pn_channel_new(double fhwhm_ts,
                             double snr_db,
                             size_t l,
                             size_t l_sim,
                             const char *pulse,
                             const char *constellation,
                             struct PnChannel **out);

/**
 * # Safety
 * `ch` must be null or a handle from [`pn_channel_new`] not yet freed.
 */
void pn_channel_free(struct PnChannel *ch);

/**
 * Rate lower bound in bits per symbol, averaged over `replicas`.
 *
 * # Safety
 * `ch` must be a live channel handle and `out` a valid pointer.
 */
enum PnStatus pn_estimate_rate(const struct PnChannel *ch,
                               uint32_t model,
                               size_t states,
                               size_t nsymb,
                               size_t replicas,
                               uint64_t seed,
                               struct PnRate *out);

/**
 * Simulates `nsymb` i.u.d. symbols through `model`.
 *
 * # Safety
 * `ch` must be a live channel handle and `out` a valid pointer. On success
 * `*out` owns a handle for [`pn_observation_free`].
 */
enum PnStatus pn_simulate(const struct PnChannel *ch,
                          uint32_t model,
                          size_t nsymb,
                          uint64_t seed,
                          struct PnObservation **out);

/**
 * Number of receiver samples, 0 for a null handle.
 *
 * # Safety
 * `obs` must be null or a live observation handle.
 */
size_t pn_observation_len(const struct PnObservation *obs);

/**
 * Receiver samples per symbol, 0 for a null handle.
 *
 * # Safety
 * `obs` must be null or a live observation handle.
 */
size_t pn_observation_samples_per_symbol(const struct PnObservation *obs);

/**
 * Copies inputs and outputs as interleaved (re, im) pairs; each buffer must
 * hold `2 * len` doubles. Either buffer may be null to skip it.
 *
 * # Safety
 * `obs` must be a live observation handle; non-null buffers must have room
 * for `2 * len` doubles.
 */
enum PnStatus pn_observation_copy(const struct PnObservation *obs,
                                  double *x,
                                  double *y,
                                  size_t len);

/**
 * # Safety
 * `obs` must be null or a handle from [`pn_simulate`] not yet freed.
 */
void pn_observation_free(struct PnObservation *obs);

/**
 * Closed-form filter-factor moments with L = 1 / delta.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PnStatus pn_moments(double beta, double delta, struct PnMoments *out);

/**
 * Amplitude-modulation lower bound in nats.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PnStatus pn_amplitude_lb(double snr, double delta, double beta, double *out);

/**
 * Phase-modulation lower bound in nats; `PnStatus::Domain` when
 * snr * delta <= 2.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PnStatus pn_phase_lb(double snr, double delta, double beta, uint32_t alpha, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHASENOISE_H */
