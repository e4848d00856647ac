#ifndef CROWDCODE_H
#define CROWDCODE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CcStatus {
  CC_STATUS_OK = 0,
  CC_STATUS_NULL_POINTER = 1,
  CC_STATUS_INVALID_ARGUMENT = 2,
  // The exact evaluator refused the size; use Monte Carlo.
  CC_STATUS_CAP_EXCEEDED = 3,
  CC_STATUS_IO = 4,
  // A Rust panic was caught at the boundary.
  CC_STATUS_INTERNAL = 5,
} CcStatus;

typedef enum CcDistKind {
  // Spammers at `1/M`, hammers at 1; uses `quality`.
  CC_DIST_KIND_SPAMMER_HAMMER = 0,
  // Uses `alpha` and `beta`.
  CC_DIST_KIND_BETA = 1,
} CcDistKind;

typedef enum CcVariant {
  CC_VARIANT_IID = 0,
  // Uses `rho_corr`.
  CC_VARIANT_PAIRED = 1,
  // Uses `kappa` and `truncation`.
  CC_VARIANT_LATENT_GROUPS = 2,
  // Uses `rho_corr`, `kappa` and `truncation`.
  CC_VARIANT_LATENT_GROUPS_PAIRED = 3,
} CcVariant;

// Opaque code matrix handle.
typedef struct CcCodeMatrix CcCodeMatrix;

// Crowd description for [`cc_run_mc`]. Unused fields are ignored.
typedef struct CcCrowd {
  enum CcDistKind dist;
  double quality;
  double alpha;
  double beta;
  enum CcVariant variant;
  double rho_corr;
  double kappa;
  // 0 selects the default truncation.
  size_t truncation;
} CcCrowd;

typedef struct CcMcResult {
  double pe_coding;
  double stderr_coding;
  // False when majority voting was not applicable (M not a power of two).
  bool has_majority;
  double pe_majority;
  double stderr_majority;
} CcMcResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *cc_last_error(void);

// Builds an `m x n` matrix from column integers (bit `l` is row `l`).
//
// # Safety
// `columns` must point to `n` readable values; `out` must be writable.
enum CcStatus cc_code_matrix_from_columns(const uint64_t *columns,
                                          size_t n,
                                          size_t m,
                                          struct CcCodeMatrix **out);

// Parses the JSON matrix format `{"m": M, "columns": [...]}`.
//
// # Safety
// `json` must be a nul-terminated string; `out` must be writable.
enum CcStatus cc_code_matrix_from_json(const char *json, struct CcCodeMatrix **out);

// Serializes a matrix to JSON. Free the string with [`cc_string_free`].
//
// # Safety
// `a` must be a live handle; `out` must be writable.
enum CcStatus cc_code_matrix_to_json(const struct CcCodeMatrix *a, char **out);

// # Safety
// `s` must come from this library and not have been freed; null is ignored.
void cc_string_free(char *s);

// # Safety
// `a` must come from this library and not have been freed; null is ignored.
void cc_code_matrix_free(struct CcCodeMatrix *a);

// Number of classes (rows), or 0 for a null handle.
//
// # Safety
// `a` must be null or a live handle.
size_t cc_code_matrix_num_classes(const struct CcCodeMatrix *a);

// Number of workers (columns), or 0 for a null handle.
//
// # Safety
// `a` must be null or a live handle.
size_t cc_code_matrix_num_workers(const struct CcCodeMatrix *a);

// Copies the column integers into `out`, which holds `len` values.
//
// # Safety
// `a` must be a live handle; `out` must have room for `len` values.
enum CcStatus cc_code_matrix_columns(const struct CcCodeMatrix *a, uint64_t *out, size_t len);

// # Safety
// `out` must be writable.
enum CcStatus cc_majority_equivalent_matrix(size_t m, size_t n, struct CcCodeMatrix **out);

// # Safety
// `out` must be writable.
enum CcStatus cc_random_balanced_matrix(size_t m,
                                        size_t n,
                                        uint64_t seed,
                                        struct CcCodeMatrix **out);

// Exact error probability of Hamming fusion, i.i.d. reliabilities.
//
// # Safety
// `a` must be a live handle; `out` must be writable.
enum CcStatus cc_pe_iid_coding(const struct CcCodeMatrix *a, double mu, double *out);

// Exact error probability of Hamming fusion with partners `(2k, 2k+1)`
// whose reliabilities have covariance `rho`.
//
// # Safety
// `a` must be a live handle; `out` must be writable.
enum CcStatus cc_pe_paired_coding(const struct CcCodeMatrix *a, double mu, double rho, double *out);

// # Safety
// `out` must be writable.
enum CcStatus cc_pe_iid_majority(size_t m, size_t n, double mu, double *out);

// # Safety
// `out` must be writable.
enum CcStatus cc_pe_paired_majority(size_t m, size_t n, double mu, double rho, double *out);

// Large-deviations bound for per-worker reliabilities `p`. When the margin
// condition fails, `*holds` is false and `*out` is NaN.
//
// # Safety
// `a` must be a live handle, `p` must hold `len` values, and `out` and
// `holds` must be writable.
enum CcStatus cc_chernoff_bound(const struct CcCodeMatrix *a,
                                const double *p,
                                size_t len,
                                double *out,
                                bool *holds);

// Minimum Hamming distance decoding of `answers` (0, 1, or -1 for
// missing); ties are broken with a generator seeded by `seed`.
//
// # Safety
// `a` must be a live handle, `answers` must hold `len` values, and
// `class_out` must be writable.
enum CcStatus cc_decode_hamming(const struct CcCodeMatrix *a,
                                const int8_t *answers,
                                size_t len,
                                uint64_t seed,
                                size_t *class_out);

// Probability of the group labelling `labels` (each `< truncation`) under
// stick-breaking with concentration `kappa`.
//
// # Safety
// `labels` must hold `n` values; `out` must be writable.
enum CcStatus cc_group_assignment_prob(const size_t *labels,
                                       size_t n,
                                       size_t truncation,
                                       double kappa,
                                       double *out);

// Monte Carlo estimate of both fusion rules with a fresh crowd per trial.
//
// # Safety
// `a` must be a live handle; `crowd` must be readable; `out` must be
// writable.
enum CcStatus cc_run_mc(const struct CcCodeMatrix *a,
                        const struct CcCrowd *crowd,
                        uint64_t trials,
                        uint64_t seed,
                        struct CcMcResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CROWDCODE_H */
