/* C interface to the shel backward error analyzer. */

#ifndef SHEL_H
#define SHEL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Outcome of an analysis (mirrors the CLI `status` field).
typedef enum ShelAnalysisStatus {
  SHEL_ANALYSIS_STATUS_BOUNDS_FOUND = 0,
  SHEL_ANALYSIS_STATUS_NONE_FOUND = 1,
  SHEL_ANALYSIS_STATUS_CAPPED = 2,
} ShelAnalysisStatus;

// Result codes of fallible calls.
typedef enum ShelStatus {
  SHEL_STATUS_OK = 0,
  // A required pointer argument was NULL.
  SHEL_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  SHEL_STATUS_INVALID_UTF8 = 2,
  // The program text is not a well-formed expression.
  SHEL_STATUS_PARSE_ERROR = 3,
  // The program uses an operator the synthesis rules do not support.
  SHEL_STATUS_UNSUPPORTED = 4,
  // A report or variable index is out of range.
  SHEL_STATUS_OUT_OF_RANGE = 5,
  // A value does not fit the requested representation.
  SHEL_STATUS_OVERFLOW = 6,
  // A numerical check could not be run.
  SHEL_STATUS_CERTIFY_ERROR = 7,
  // An invalid option value.
  SHEL_STATUS_INVALID_ARGUMENT = 8,
  // An internal error; the handle arguments are left unchanged.
  SHEL_STATUS_PANIC = 99,
} ShelStatus;

// A finished analysis: the saturated database and its bound reports.
typedef struct ShelAnalysis ShelAnalysis;

// A parsed program.
typedef struct ShelProgram ShelProgram;

// Resource limits for [`shel_analyze`]. Obtain defaults from
// [`shel_engine_options_default`].
typedef struct ShelEngineOptions {
  uint64_t max_iterations;
  uint64_t max_facts;
  // Bound cap numerator/denominator (ε units).
  uint64_t bound_cap_num;
  uint64_t bound_cap_den;
  // Wall-clock limit in seconds; zero, negative or infinite means none.
  double timeout_seconds;
} ShelEngineOptions;

// Numerical certification settings for [`shel_certify`].
typedef struct ShelCertifyOptions {
  uint64_t samples;
  uint64_t seed;
  // Draw only positive inputs.
  bool positive_inputs;
  // Oracle precision in bits (0 selects the default).
  uint32_t precision;
} ShelCertifyOptions;

// Summary of a certification run.
typedef struct ShelCertifySummary {
  bool passed;
  uint64_t samples;
  uint64_t skipped;
  uint64_t failures;
  // log₂ of the largest exactness residual (−∞ if every sample was exact).
  double max_residual_log2;
  // Largest observed `RP(xᵢ, x̃ᵢ)/ε` over all variables.
  double max_ratio;
} ShelCertifySummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// The description of the last failure on this thread ("" if none). The
// pointer stays valid until the next failing call on this thread.
const char *shel_last_error(void);

// The library version as a static string.
const char *shel_version(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must be NULL or a string returned by this library that has not been
// freed.
void shel_string_free(char *s);

// Parses an s-expression such as `(Add x (Mul x y))`.
//
// # Safety
// `text` must be a NUL-terminated string and `out` valid for writes.
enum ShelStatus shel_program_parse(const char *text, struct ShelProgram **out);

// Prints a program in canonical s-expression form.
//
// # Safety
// `p` must be a live program handle and `out` valid for writes.
enum ShelStatus shel_program_to_string(const struct ShelProgram *p, char **out);

// Releases a program. NULL is ignored.
//
// # Safety
// `p` must be NULL or a program handle that has not been freed.
void shel_program_free(struct ShelProgram *p);

// Fills `out` with the default engine limits.
//
// # Safety
// `out` must be valid for writes.
enum ShelStatus shel_engine_options_default(struct ShelEngineOptions *out);

// Synthesizes backward error bounds for `p`. `opts` may be NULL for the
// defaults. On success `*out` receives a new analysis handle.
//
// # Safety
// `p` must be a live program handle, `opts` NULL or valid for reads, and
// `out` valid for writes.
enum ShelStatus shel_analyze(const struct ShelProgram *p,
                             const struct ShelEngineOptions *opts,
                             struct ShelAnalysis **out);

// Releases an analysis. NULL is ignored.
//
// # Safety
// `a` must be NULL or an analysis handle that has not been freed.
void shel_analysis_free(struct ShelAnalysis *a);

// Whether bounds were found, none exist, or a limit stopped the search.
//
// # Safety
// `a` must be a live analysis handle and `out` valid for writes.
enum ShelStatus shel_analysis_status(const struct ShelAnalysis *a, enum ShelAnalysisStatus *out);

// Number of Pareto-minimal bound vectors (0 for NULL).
//
// # Safety
// `a` must be NULL or a live analysis handle.
size_t shel_analysis_report_count(const struct ShelAnalysis *a);

// Number of free variables of the analyzed program (0 for NULL).
//
// # Safety
// `a` must be NULL or a live analysis handle.
size_t shel_analysis_var_count(const struct ShelAnalysis *a);

// Index of the report with the smallest maximum bound.
//
// # Safety
// `a` must be a live analysis handle and `out` valid for writes.
enum ShelStatus shel_analysis_smallest_max(const struct ShelAnalysis *a, size_t *out);

// Name of variable `var` (first-occurrence order).
//
// # Safety
// `a` must be a live analysis handle and `out` valid for writes.
enum ShelStatus shel_analysis_var_name(const struct ShelAnalysis *a, size_t var, char **out);

// The bound of variable `var` in report `report` as an exact fraction
// `num/den` in ε units.
//
// # Safety
// `a` must be a live analysis handle; `num` and `den` valid for writes.
enum ShelStatus shel_analysis_bound(const struct ShelAnalysis *a,
                                    size_t report,
                                    size_t var,
                                    uint64_t *num,
                                    uint64_t *den);

// The bound of variable `var` in report `report` as a rational string
// such as `"3/2"`.
//
// # Safety
// `a` must be a live analysis handle and `out` valid for writes.
enum ShelStatus shel_analysis_bound_string(const struct ShelAnalysis *a,
                                           size_t report,
                                           size_t var,
                                           char **out);

// The analysis as the CLI's JSON document. With `all_bounds` false only
// the smallest-max report is included.
//
// # Safety
// `a` must be a live analysis handle and `out` valid for writes.
enum ShelStatus shel_analysis_to_json(const struct ShelAnalysis *a, bool all_bounds, char **out);

// The derivation behind report `report` in its textual form.
//
// # Safety
// `a` must be a live analysis handle and `out` valid for writes.
enum ShelStatus shel_analysis_derivation(const struct ShelAnalysis *a, size_t report, char **out);

// Fills `out` with default certification settings.
//
// # Safety
// `out` must be valid for writes.
enum ShelStatus shel_certify_options_default(struct ShelCertifyOptions *out);

// Checks report `report` numerically on random binary64 inputs: each
// sampled witness must reproduce the computed output and stay within the
// claimed per-variable bounds. `opts` may be NULL for the defaults.
//
// # Safety
// `a` must be a live analysis handle, `opts` NULL or valid for reads, and
// `out` valid for writes.
enum ShelStatus shel_certify(const struct ShelAnalysis *a,
                             size_t report,
                             const struct ShelCertifyOptions *opts,
                             struct ShelCertifySummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHEL_H */
