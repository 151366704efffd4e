#ifndef PFSPRIOR_H
#define PFSPRIOR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PfsStatus {
  PFS_STATUS_OK = 0,
  PFS_STATUS_NULL_POINTER = 1,
  PFS_STATUS_DOMAIN = 2,
  PFS_STATUS_DESCRIPTOR = 3,
  PFS_STATUS_INVERSION = 4,
  PFS_STATUS_DEGENERATE = 5,
  PFS_STATUS_GUARD = 6,
  PFS_STATUS_IO = 7,
  PFS_STATUS_PARSE = 8,
  PFS_STATUS_BUFFER_TOO_SMALL = 9,
  PFS_STATUS_INVALID_UTF8 = 10,
  PFS_STATUS_PANIC = 11,
} PfsStatus;

// Opaque dataset.
typedef struct PfsDataset PfsDataset;

// Opaque prior family.
typedef struct PfsPrior PfsPrior;

// Opaque chain result with metrics against the dataset's true model.
typedef struct PfsSummary PfsSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *pfs_last_error_message(void);

// Frees a string returned by this library.
void pfs_string_free(char *s);

// Parses a descriptor such as `shp:phi=1,theta=1`.
enum PfsStatus pfs_prior_parse(const char *descriptor, struct PfsPrior **out);

void pfs_prior_free(struct PfsPrior *prior);

// Canonical descriptor; free with [`pfs_string_free`].
enum PfsStatus pfs_prior_describe(const struct PfsPrior *prior, char **out);

enum PfsStatus pfs_log_size_prior(const struct PfsPrior *prior, size_t k, size_t p, double *out);

// `ln P(A|p)` for the model with the given 1-based indices.
enum PfsStatus pfs_log_model_prior(const struct PfsPrior *prior,
                                   const size_t *model,
                                   size_t model_len,
                                   size_t p,
                                   double *out);

enum PfsStatus pfs_children_ratio(const struct PfsPrior *prior, size_t k, size_t p, double *out);

// Writes the `p + 1` stopping probabilities `Q_0..Q_p` into `out`.
enum PfsStatus pfs_stopping_schedule(const struct PfsPrior *prior,
                                     size_t p,
                                     double *out,
                                     size_t out_len);

enum PfsStatus pfs_log_bf_zellner_siow(size_t n, size_t k_eff, double r_squared, double *out);

enum PfsStatus pfs_snr_to_r2(double snr, double *out);

// Simulates a dataset with equal true coefficients.
enum PfsStatus pfs_dataset_generate(size_t n,
                                    size_t p,
                                    size_t p_true,
                                    double snr,
                                    uint64_t seed,
                                    struct PfsDataset **out);

// Wraps caller data: `y` has `n` entries, `x` is `n × p` in row-major
// order. The true model is recorded as empty.
enum PfsStatus pfs_dataset_from_arrays(const double *y,
                                       const double *x,
                                       size_t n,
                                       size_t p,
                                       struct PfsDataset **out);

void pfs_dataset_free(struct PfsDataset *data);

enum PfsStatus pfs_dataset_dims(const struct PfsDataset *data, size_t *n, size_t *p);

// Copies the true model's 1-based indices; `len` receives the model size
// even when `cap` is too small.
enum PfsStatus pfs_dataset_true_model(const struct PfsDataset *data,
                                      size_t *out,
                                      size_t cap,
                                      size_t *len);

enum PfsStatus pfs_fit_stats(const struct PfsDataset *data,
                             const size_t *model,
                             size_t model_len,
                             double *r_squared,
                             size_t *effective_rank);

// Runs one chain with equal kernel weights from the empty model.
enum PfsStatus pfs_run_chain(const struct PfsPrior *prior,
                             const struct PfsDataset *data,
                             size_t draws,
                             size_t burn_in,
                             uint64_t seed,
                             struct PfsSummary **out);

void pfs_summary_free(struct PfsSummary *summary);

enum PfsStatus pfs_summary_total(const struct PfsSummary *summary, uint64_t *out);

enum PfsStatus pfs_summary_true_model_probability(const struct PfsSummary *summary, double *out);

enum PfsStatus pfs_summary_models_for_95(const struct PfsSummary *summary, size_t *out);

// Visit frequency of one model.
enum PfsStatus pfs_summary_model_probability(const struct PfsSummary *summary,
                                             const size_t *model,
                                             size_t model_len,
                                             double *out);

// Writes the `p` inclusion frequencies into `out`.
enum PfsStatus pfs_summary_inclusion(const struct PfsSummary *summary, double *out, size_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PFSPRIOR_H */
