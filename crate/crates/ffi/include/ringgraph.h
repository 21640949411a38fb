#ifndef RINGGRAPH_H
#define RINGGRAPH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RgStatus {
  RG_STATUS_OK = 0,
  RG_STATUS_NULL_POINTER = 1,
  // Bad argument at the boundary: invalid UTF-8, wrong buffer length or
  // an unknown enum value.
  RG_STATUS_INVALID_ARGUMENT = 2,
  RG_STATUS_DOMAIN = 3,
  RG_STATUS_VALIDATION = 4,
  RG_STATUS_RESONANCE = 5,
  RG_STATUS_OUT_OF_BAND = 6,
  RG_STATUS_DEGENERATE_JACOBIAN = 7,
  RG_STATUS_UNSUPPORTED = 8,
  RG_STATUS_PARSE = 9,
  RG_STATUS_CONFIG = 10,
  RG_STATUS_IO = 11,
  RG_STATUS_PANIC = 12,
} RgStatus;

typedef enum RgRingVariant {
  RG_RING_VARIANT_BALANCED = 0,
  RG_RING_VARIANT_UNBALANCED = 1,
} RgRingVariant;

typedef enum RgGyrator {
  RG_GYRATOR_COMPOSED = 0,
  RG_GYRATOR_IDEAL = 1,
} RgGyrator;

// Opaque circuit handle.
typedef struct RgNetlist RgNetlist;

// Opaque swept S-matrix handle.
typedef struct RgSpectrum RgSpectrum;

// Two-port ring description. Lengths in m, attenuation in Np, phase in rad.
typedef struct RgRingParams {
  double circumference;
  // Per-bond attenuation; placed according to `variant`.
  double gamma_half;
  // An `RgRingVariant` value.
  uint32_t variant;
  // An `RgGyrator` value.
  uint32_t gyrator;
  double gyrator_phase;
  // Non-zero enables distributed cable loss.
  int32_t uniform_loss;
} RgRingParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL after a success.
// The pointer stays valid until the next call on the same thread.
const char *rg_last_error(void);

// Library version as a static NUL-terminated string.
const char *rg_version(void);

// Balanced ring with a composed π gyrator and no cable loss.
struct RgRingParams rg_ring_params_default(double circumference);

// Build the two-port ring.
//
// # Safety
// `params` must point to a valid struct and `out` to writable storage.
enum RgStatus rg_ring_new(const struct RgRingParams *params, struct RgNetlist **out);

// Parse a netlist document from TOML text and validate it.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` writable.
enum RgStatus rg_netlist_parse(const char *toml, struct RgNetlist **out);

// Load and validate a netlist document from a file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum RgStatus rg_netlist_load(const char *path, struct RgNetlist **out);

// Number of external ports.
//
// # Safety
// `net` must be a live handle and `ports` writable.
enum RgStatus rg_netlist_ports(const struct RgNetlist *net, size_t *ports);

// # Safety
// `net` must be NULL or a handle not yet freed.
void rg_netlist_free(struct RgNetlist *net);

// Sweep `net` over `n_points` uniformly spaced frequencies in Hz.
//
// # Safety
// `net` must be a live handle and `out` writable.
enum RgStatus rg_sweep(const struct RgNetlist *net,
                       double f_start,
                       double f_stop,
                       size_t n_points,
                       struct RgSpectrum **out);

// # Safety
// `spec` must be NULL or a handle not yet freed.
void rg_spectrum_free(struct RgSpectrum *spec);

// Number of frequency points, or 0 for a NULL handle.
//
// # Safety
// `spec` must be NULL or a live handle.
size_t rg_spectrum_len(const struct RgSpectrum *spec);

// Number of ports, or 0 for a NULL handle.
//
// # Safety
// `spec` must be NULL or a live handle.
size_t rg_spectrum_ports(const struct RgSpectrum *spec);

// Copy the grid frequencies (Hz) into `out`, which holds `len` doubles.
//
// # Safety
// `spec` must be a live handle and `out` valid for `len` writes.
enum RgStatus rg_spectrum_frequencies(const struct RgSpectrum *spec, double *out, size_t len);

// Copy `S[to][from]` (0-based ports) as interleaved complex values.
// `len` must be twice the number of frequency points.
//
// # Safety
// `spec` must be a live handle and `out` valid for `len` writes.
enum RgStatus rg_spectrum_element(const struct RgSpectrum *spec,
                                  size_t to,
                                  size_t from,
                                  double *out,
                                  size_t len);

// Complex transmission delay (s) of `S[to][from]` as interleaved values.
// Points where the delay is undefined, including both grid ends, are NaN.
//
// # Safety
// `spec` must be a live handle and `out` valid for `len` writes.
enum RgStatus rg_transmission_delay(const struct RgSpectrum *spec,
                                    size_t from,
                                    size_t to,
                                    double *out,
                                    size_t len);

// `|S21|² − |S12|²` per frequency point of a two-port spectrum.
//
// # Safety
// `spec` must be a live handle and `out` valid for `len` writes.
enum RgStatus rg_asymmetry(const struct RgSpectrum *spec, double *out, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RINGGRAPH_H */
