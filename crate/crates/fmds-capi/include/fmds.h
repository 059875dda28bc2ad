/* C interface of the fmds library. Generated by cbindgen; do not edit. */

#ifndef FMDS_H
#define FMDS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Success.
#define FMDS_OK 0

// A pointer was null, an index out of range, or an argument malformed.
#define FMDS_ERR_INVALID 1

// Input outside the mathematical domain of the operation.
#define FMDS_ERR_DOMAIN 2

// The requested (family, operation) combination is deliberately not provided.
#define FMDS_ERR_UNSUPPORTED 3

// A numerical routine failed to converge.
#define FMDS_ERR_NUMERIC 4

// The neighborhood graph is disconnected and the policy forbids dropping points.
#define FMDS_ERR_DISCONNECTED 5

// A matrix destined for classical scaling contains a non-finite entry.
#define FMDS_ERR_NONFINITE 6

// Filesystem failure.
#define FMDS_ERR_IO 7

// Malformed JSON or CSV; the message names the offending field.
#define FMDS_ERR_PARSE 8

// A panic was caught at the boundary (library bug; please report).
#define FMDS_ERR_PANIC 9

// Opaque Euclidean embedding (points, eigenvalues, requested dimension).
typedef struct FmdsEmbedding FmdsEmbedding;

// Opaque pairwise-dissimilarity matrix.
typedef struct FmdsMatrix FmdsMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *fmds_version(void);

// Message of the most recent failure on this thread, or null if none.
// Valid until the next failing fmds call on the same thread.
const char *fmds_last_error_message(void);

// Build a matrix from a row-major `n x n` buffer. The buffer must be
// symmetric with a zero diagonal and nonnegative entries (`inf` is allowed,
// NaN is not); points are labeled "0" .. "n-1".
//
// # Safety
// `values` must point to `n * n` readable doubles; `out` must be a valid
// destination for one pointer.
int32_t fmds_matrix_from_data(size_t n,
                              const double *values,
                              struct FmdsMatrix **out);

// Run the distance stage of a JSON experiment config (same schema as
// `fmds distances --config`).
//
// # Safety
// `config_json` must be NUL-terminated; `out` must be a valid destination.
int32_t fmds_matrix_from_config_json(const char *config_json,
                                     struct FmdsMatrix **out);

// Load a matrix saved by `fmds_matrix_save_csv` or the CLI.
//
// # Safety
// `path` must be NUL-terminated; `out` must be a valid destination.
int32_t fmds_matrix_load_csv(const char *path,
                             struct FmdsMatrix **out);

// Save a matrix as labeled CSV.
//
// # Safety
// `matrix` must be a live handle; `path` must be NUL-terminated.
int32_t fmds_matrix_save_csv(const struct FmdsMatrix *matrix,
                             const char *path);

// Number of points, or 0 for a null handle.
//
// # Safety
// `matrix` must be null or a live handle.
size_t fmds_matrix_size(const struct FmdsMatrix *matrix);

// Read one entry.
//
// # Safety
// `matrix` must be a live handle; `out` a valid destination for one double.
int32_t fmds_matrix_get(const struct FmdsMatrix *matrix,
                        size_t i,
                        size_t j,
                        double *out);

// Covering radius: the largest distance from any point to its nearest
// other point. Needs at least two points.
//
// # Safety
// `matrix` must be a live handle; `out` a valid destination for one double.
int32_t fmds_matrix_covering_radius(const struct FmdsMatrix *matrix,
                                    double *out);

// Schoenberg test: is the matrix isometrically embeddable in Euclidean
// space? Writes 1 or 0 to `out_embeddable` and the most negative
// double-centered eigenvalue to `out_min_eigenvalue` (either may be null).
//
// # Safety
// `matrix` must be a live handle; non-null out pointers must be valid.
int32_t fmds_matrix_embeddable(const struct FmdsMatrix *matrix,
                               int32_t *out_embeddable,
                               double *out_min_eigenvalue);

// Release a matrix handle. Null is a no-op.
//
// # Safety
// `matrix` must be null or an unreleased handle from this library.
void fmds_matrix_free(struct FmdsMatrix *matrix);

// Classical scaling of the matrix into `dim` dimensions.
//
// # Safety
// `matrix` must be a live handle; `out` a valid destination for one pointer.
int32_t fmds_classical_scaling(const struct FmdsMatrix *matrix,
                               size_t dim,
                               struct FmdsEmbedding **out);

// Isomap with a radius neighborhood graph. When the graph is disconnected,
// `largest_component = 0` fails with `FMDS_ERR_DISCONNECTED` and nonzero
// embeds the largest component (point count via `fmds_embedding_size`).
//
// # Safety
// `matrix` must be a live handle; `out` a valid destination for one pointer.
int32_t fmds_isomap_radius(const struct FmdsMatrix *matrix,
                           double radius,
                           size_t dim,
                           int32_t largest_component,
                           struct FmdsEmbedding **out);

// Isomap with a symmetrized k-nearest-neighbor graph; see
// [`fmds_isomap_radius`] for the disconnection policy.
//
// # Safety
// `matrix` must be a live handle; `out` a valid destination for one pointer.
int32_t fmds_isomap_knn(const struct FmdsMatrix *matrix,
                        size_t k,
                        size_t dim,
                        int32_t largest_component,
                        struct FmdsEmbedding **out);

// Number of embedded points, or 0 for a null handle.
//
// # Safety
// `embedding` must be null or a live handle.
size_t fmds_embedding_size(const struct FmdsEmbedding *embedding);

// Embedding dimension, or 0 for a null handle.
//
// # Safety
// `embedding` must be null or a live handle.
size_t fmds_embedding_dim(const struct FmdsEmbedding *embedding);

// Copy the coordinates, point-major, into a caller buffer of exactly
// `size * dim` doubles (row i holds point i).
//
// # Safety
// `embedding` must be a live handle; `buffer` must hold `len` doubles.
int32_t fmds_embedding_coords(const struct FmdsEmbedding *embedding,
                              double *buffer,
                              size_t len);

// Copy the double-centered eigenvalues (descending; length = point count)
// into a caller buffer of exactly `size` doubles.
//
// # Safety
// `embedding` must be a live handle; `buffer` must hold `len` doubles.
int32_t fmds_embedding_eigenvalues(const struct FmdsEmbedding *embedding,
                                   double *buffer,
                                   size_t len);

// Normalized stress of the embedding against a matrix of the same size.
//
// # Safety
// `embedding` and `matrix` must be live handles; `out` a valid destination.
int32_t fmds_embedding_stress(const struct FmdsEmbedding *embedding,
                              const struct FmdsMatrix *matrix,
                              double *out);

// Release an embedding handle. Null is a no-op.
//
// # Safety
// `embedding` must be null or an unreleased handle from this library.
void fmds_embedding_free(struct FmdsEmbedding *embedding);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FMDS_H */
