#ifndef WMD_H
#define WMD_H

#include <stddef.h>
#include <stdint.h>

// Status codes. Values 2-4 match the command-line exit codes.
typedef enum WmdStatus {
  WMD_STATUS_OK = 0,
  // A required pointer argument was null.
  WMD_STATUS_NULL_POINTER = 1,
  // Invalid arguments or malformed input.
  WMD_STATUS_INPUT_ERROR = 2,
  // The data do not support the requested computation.
  WMD_STATUS_DEGENERATE = 3,
  // Internal failure, including a caught panic.
  WMD_STATUS_INTERNAL = 4,
} WmdStatus;

typedef enum WmdMethod {
  WMD_METHOD_WMD_OPTIMAL = 0,
  WMD_METHOD_WMD_SIMPLE = 1,
  WMD_METHOD_WMD_COMPLETE = 2,
  // Uses the `w1`, `w2` arguments of [`wmd_test`].
  WMD_METHOD_WMD_FIXED = 3,
  // Uses `w1` as the mixing weight; NaN selects the default.
  WMD_METHOD_BHOJ = 4,
  WMD_METHOD_T_PAIRED_COMPLETE = 5,
  WMD_METHOD_T_PAIRED_IMPUTED = 6,
  WMD_METHOD_WILCOXON_COMPLETE = 7,
  WMD_METHOD_WILCOXON_IMPUTED = 8,
} WmdMethod;

// Opaque sample handle.
typedef struct WmdSample WmdSample;

typedef struct WmdTestResult {
  double estimate;
  double std_error;
  double statistic;
  double p_value;
  // NaN for tests that do not use weights.
  double w1;
  double w2;
  size_t n0;
  size_t n1;
  size_t n2;
} WmdTestResult;

// Population moments used by the weight and variance functions.
typedef struct WmdMoments {
  double p1;
  double p2;
  double p12;
  double sigma1;
  double sigma2;
  double rho;
} WmdMoments;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next library call on the same thread.
const char *wmd_last_error(void);

// Builds a sample from `len` subject rows; NaN marks a missing value and
// rows missing both values are dropped.
//
// # Safety
// `y1` and `y2` must point to `len` readable doubles; `out_sample` must be writable.
enum WmdStatus wmd_sample_new(const double *y1,
                              const double *y2,
                              size_t len,
                              struct WmdSample **out_sample);

// Releases a sample. Null is ignored.
//
// # Safety
// `sample` must come from [`wmd_sample_new`] and not be used afterwards.
void wmd_sample_free(struct WmdSample *sample);

// Block sizes: complete pairs, group-1-only and group-2-only subjects.
//
// # Safety
// All pointers must be valid.
enum WmdStatus wmd_sample_counts(const struct WmdSample *sample,
                                 size_t *n0,
                                 size_t *n1,
                                 size_t *n2);

// Runs a test. `bootstrap_b = 0` selects the plug-in standard error for
// the weighted tests; otherwise `bootstrap_b` resamples seeded by `seed`.
//
// # Safety
// `sample` and `result` must be valid.
enum WmdStatus wmd_test(const struct WmdSample *sample,
                        enum WmdMethod method,
                        double w1,
                        double w2,
                        size_t bootstrap_b,
                        uint64_t seed,
                        struct WmdTestResult *result);

// Variance-minimizing weights and the minimal asymptotic variance.
//
// # Safety
// All pointers must be valid.
enum WmdStatus wmd_optimal_weights(const struct WmdMoments *m,
                                   double *w1,
                                   double *w2,
                                   double *variance);

// Asymptotic variance of the scaled estimator at fixed weights.
//
// # Safety
// All pointers must be valid.
enum WmdStatus wmd_asymptotic_variance(const struct WmdMoments *m,
                                       double w1,
                                       double w2,
                                       double *variance);

// Two-sided asymptotic power at level `alpha` with `n` subjects.
//
// # Safety
// All pointers must be valid.
enum WmdStatus wmd_analytic_power(const struct WmdMoments *m,
                                  double mu1,
                                  double mu2,
                                  double w1,
                                  double w2,
                                  size_t n,
                                  double alpha,
                                  double *power);

// Standard normal distribution function.
double wmd_normal_cdf(double x);

// Runs every scenario in `scenario_text` (scenario-file syntax) and
// returns a JSON array of reports in `*json_out`. Release it with
// [`wmd_string_free`].
//
// # Safety
// `scenario_text` must be a NUL-terminated string; `json_out` must be writable.
enum WmdStatus wmd_simulate(const char *scenario_text, char **json_out);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void wmd_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WMD_H */
