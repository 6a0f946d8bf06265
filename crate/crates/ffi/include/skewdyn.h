#ifndef SKEWDYN_H
#define SKEWDYN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum SdStatus {
  SD_STATUS_OK = 0,
  SD_STATUS_NULL_POINTER = 1,
  SD_STATUS_INVALID_ARGUMENT = 2,
  // The computation itself failed (critical orbit, terminated branch, ...).
  SD_STATUS_COMPUTATION = 3,
  // A configuration document was rejected.
  SD_STATUS_CONFIG = 4,
  SD_STATUS_IO = 5,
  // A caller-provided buffer is too small; the required size is reported.
  SD_STATUS_BUFFER_TOO_SMALL = 6,
  SD_STATUS_PANIC = 7,
} SdStatus;

// Opaque handle to an interval map.
typedef struct SdMap SdMap;

// Opaque handle to a skew-product.
typedef struct SdSkew SdSkew;

// Summary of a monotone branch T_n(x).
typedef struct SdBranch {
  double t_lo;
  double t_hi;
  double img_lo;
  double img_hi;
  // fⁿ(x).
  double image;
  // r_n(x).
  double r_n;
  size_t depth;
  // +1 when fⁿ is increasing on the branch, -1 otherwise.
  int8_t orientation;
} SdBranch;

// Version string of the library, statically allocated.
const char *sd_version(void);

// Copies the calling thread's last error message into `buf` (truncated
// and always NUL-terminated when `len > 0`). Returns the full message
// length including the terminator, or 0 when no error was recorded.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t sd_last_error_message(char *buf, size_t len);

// Creates a map from the built-in catalogue: "logistic", "tent",
// "doubling", "two_well", "identity" or "quadratic" (a − x² on its
// standard symmetric domain; `a` is ignored by the other families).
//
// # Safety
// `family` must be a NUL-terminated string and `out` a valid pointer.
enum SdStatus sd_map_new(const char *family, double a, struct SdMap **out);

// Releases a map. Null is ignored.
//
// # Safety
// `map` must be null or a handle from `sd_map_new` not yet freed.
void sd_map_free(struct SdMap *map);

// # Safety
// `map` must be a live handle and `out` a valid pointer.
enum SdStatus sd_map_eval(const struct SdMap *map, double x, double *out);

// First derivative f'(x).
//
// # Safety
// `map` must be a live handle and `out` a valid pointer.
enum SdStatus sd_map_derivative(const struct SdMap *map, double x, double *out);

// # Safety
// `map` must be a live handle; `lo` and `hi` valid pointers.
enum SdStatus sd_map_domain(const struct SdMap *map, double *lo, double *hi);

// Writes the critical points into `buf` and their number into `count`.
// When `cap` is too small nothing is copied, `count` still receives the
// required size and `SD_STATUS_BUFFER_TOO_SMALL` is returned.
//
// # Safety
// `map` must be a live handle, `buf` must hold `cap` doubles (or be null
// when `cap` is 0) and `count` must be valid.
enum SdStatus sd_map_critical_points(const struct SdMap *map,
                                     double *buf,
                                     size_t cap,
                                     size_t *count);

// Finite-time Lyapunov exponent (1/n) Σ log|f'(fʲx)| over n steps.
//
// # Safety
// `map` must be a live handle and `out` a valid pointer.
enum SdStatus sd_ftle(const struct SdMap *map, double x, size_t n, double *out);

// Maximal monotone branch of fⁿ around x.
//
// # Safety
// `map` must be a live handle and `out` a valid pointer.
enum SdStatus sd_track_branch(const struct SdMap *map, double x, size_t n, struct SdBranch *out);

// Histogram weights of the averaged push-forward measure on `bins`
// equal bins of the map's domain, written to `weights[0..bins]`.
//
// # Safety
// `map` must be a live handle and `weights` must hold `bins` doubles.
enum SdStatus sd_empirical_measure(const struct SdMap *map,
                                   size_t samples,
                                   size_t n,
                                   size_t bins,
                                   uint64_t seed,
                                   double *weights);

// Viana skew-product with base θ ↦ dθ mod 1 and fibers
// a0 + α sin 2πθ − x², on the default fiber domain.
//
// # Safety
// `out` must be a valid pointer.
enum SdStatus sd_skew_viana_new(uint32_t d, double a0, double alpha, struct SdSkew **out);

// The default Viana skew-product (d = 16, a0 = 1.7, α = 0.05).
//
// # Safety
// `out` must be a valid pointer.
enum SdStatus sd_skew_viana_default(struct SdSkew **out);

// Releases a skew-product. Null is ignored.
//
// # Safety
// `skew` must be null or a live handle.
void sd_skew_free(struct SdSkew *skew);

// One forward step (θ, x) ↦ (g(θ), f(θ, x)).
//
// # Safety
// `skew` must be a live handle; the output pointers must be valid.
enum SdStatus sd_skew_step(const struct SdSkew *skew,
                           double theta,
                           double x,
                           double *theta_out,
                           double *x_out);

// Full-derivative exponent (1/n) log of the co-norm of Dφⁿ(θ, x).
//
// # Safety
// `skew` must be a live handle and `out` a valid pointer.
enum SdStatus sd_ftle_full(const struct SdSkew *skew,
                           double theta,
                           double x,
                           size_t n,
                           double *out);

// Pliss times of `values[0..len]` for constants c1 < c2 ≤ a. The 1-based
// indices go to `indices` (capacity `cap`), their number to `count` and
// their density to `density`. With too small a buffer `count` receives
// the required size and `SD_STATUS_BUFFER_TOO_SMALL` is returned.
//
// # Safety
// `values` must hold `len` doubles, `indices` `cap` entries, and `count`
// and `density` must be valid.
enum SdStatus sd_pliss_times(const double *values,
                             size_t len,
                             double c1,
                             double c2,
                             double a,
                             size_t *indices,
                             size_t cap,
                             size_t *count,
                             double *density);

// Parses a TOML experiment configuration, runs it and returns the
// manifest as a JSON string through `manifest_json` (release it with
// [`sd_string_free`]). A failed experiment still yields its manifest
// together with `SD_STATUS_COMPUTATION`.
//
// # Safety
// `config_toml` must be a NUL-terminated string and `manifest_json` a
// valid pointer.
enum SdStatus sd_run_config(const char *config_toml, char **manifest_json);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a string obtained from this library, not yet freed.
void sd_string_free(char *s);

#endif  /* SKEWDYN_H */
