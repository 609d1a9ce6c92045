#ifndef LISTDEC_H
#define LISTDEC_H

#include <stddef.h>
#include <stdint.h>

/*
 Status codes returned by every fallible function.
 */
typedef enum ListdecStatus {
  LISTDEC_STATUS_OK = 0,
  LISTDEC_STATUS_NULL_POINTER = 1,
  /*
   Bad sizes, a malformed string, or an index past the end.
   */
  LISTDEC_STATUS_INVALID_ARGUMENT = 2,
  /*
   The configuration was rejected.
   */
  LISTDEC_STATUS_INVALID_CONFIG = 3,
  /*
   The estimator failed on this input.
   */
  LISTDEC_STATUS_NUMERICAL = 4,
  /*
   A caller buffer is shorter than the data.
   */
  LISTDEC_STATUS_BUFFER_TOO_SMALL = 5,
  /*
   A Rust panic was caught at the boundary.
   */
  LISTDEC_STATUS_PANIC = 6,
} ListdecStatus;

/*
 Hypothesis list and trace of one estimator run.
 */
typedef struct ListdecResult ListdecResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Runs the estimator with default settings for inlier fraction `alpha`.

 `points` holds `m` rows of `d` doubles, row-major. On success `*out`
 receives a new handle; on failure it is set to null.

 # Safety
 `points` must be valid for `m·d` reads and `out` for one write.
 */
enum ListdecStatus listdec_estimate(const double *points,
                                    size_t m,
                                    size_t d,
                                    double alpha,
                                    uint64_t seed,
                                    struct ListdecResult **out);

/*
 Like [`listdec_estimate`] but takes the full estimator configuration as a
 NUL-terminated JSON object (the `estimator` block of an experiment config).

 # Safety
 As for [`listdec_estimate`]; `config_json` must be a valid C string.
 */
enum ListdecStatus listdec_estimate_with_config(const double *points,
                                                size_t m,
                                                size_t d,
                                                const char *config_json,
                                                struct ListdecResult **out);

/*
 Releases a handle. Null is ignored.

 # Safety
 `result` must come from this library and not be used afterwards.
 */
void listdec_result_free(struct ListdecResult *result);

/*
 Number of hypotheses, or 0 for a null handle.

 # Safety
 `result` must be null or a live handle.
 */
size_t listdec_result_len(const struct ListdecResult *result);

/*
 Point dimension `d`, or 0 for a null handle.

 # Safety
 `result` must be null or a live handle.
 */
size_t listdec_result_dim(const struct ListdecResult *result);

/*
 Writes the number of points in hypothesis `k` to `*size`.

 # Safety
 `result` must be a live handle and `size` valid for one write.
 */
enum ListdecStatus listdec_hypothesis_size(const struct ListdecResult *result,
                                           size_t k,
                                           size_t *size);

/*
 Copies the ascending point indices of hypothesis `k` into `buf`, which
 must hold at least `listdec_hypothesis_size` entries.

 # Safety
 `buf` must be valid for `cap` writes.
 */
enum ListdecStatus listdec_hypothesis_indices(const struct ListdecResult *result,
                                              size_t k,
                                              size_t *buf,
                                              size_t cap);

/*
 Copies the `d x d` covariance estimate of hypothesis `k`, row-major, into
 `buf`, which must hold at least `d²` doubles.

 # Safety
 `buf` must be valid for `cap` writes.
 */
enum ListdecStatus listdec_hypothesis_covariance(const struct ListdecResult *result,
                                                 size_t k,
                                                 double *buf,
                                                 size_t cap);

/*
 The recursion trace as a newly allocated JSON string, or null on failure.
 Release it with [`listdec_string_free`].

 # Safety
 `result` must be null or a live handle.
 */
char *listdec_result_trace_json(const struct ListdecResult *result);

/*
 Releases a string returned by this library. Null is ignored.

 # Safety
 `s` must come from this library and not be used afterwards.
 */
void listdec_string_free(char *s);

/*
 Message for the last failure on this thread, or null if the last call
 succeeded. Valid until the next call into the library on this thread.
 */
const char *listdec_last_error_message(void);

/*
 Library version as a static C string.
 */
const char *listdec_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LISTDEC_H */
