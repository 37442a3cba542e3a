#ifndef URBAN_LRA_H
#define URBAN_LRA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of matrix columns: 6 demand categories × 24 hours.
 */
#define ULRA_N_TTD 144

/**
 * Status code returned by every fallible function.
 */
typedef enum UlraStatus {
  ULRA_STATUS_OK = 0,
  ULRA_STATUS_NULL_POINTER = 1,
  ULRA_STATUS_INVALID_ARGUMENT = 2,
  ULRA_STATUS_BUFFER_TOO_SMALL = 3,
  ULRA_STATUS_IO = 4,
  ULRA_STATUS_SCHEMA = 5,
  ULRA_STATUS_NON_FINITE = 6,
  ULRA_STATUS_NO_CONVERGENCE = 7,
  ULRA_STATUS_RANK_OUT_OF_RANGE = 8,
  ULRA_STATUS_UNDEFINED = 9,
  ULRA_STATUS_NO_RANK_SATISFIES = 10,
  ULRA_STATUS_COINCIDENT_CENTERS = 11,
  ULRA_STATUS_DEGENERATE_ELLIPSE = 12,
  ULRA_STATUS_PANIC = 13,
} UlraStatus;

/**
 * Rank-r joint embedding of regions and demand-hour columns.
 */
typedef struct UlraEmbedding UlraEmbedding;

/**
 * Region × 144 count matrix with its region ids.
 */
typedef struct UlraMatrix UlraMatrix;

/**
 * Full thin singular value decomposition of a matrix.
 */
typedef struct UlraSvd UlraSvd;

/**
 * Standard deviational ellipse. Rotation is the major axis in degrees
 * clockwise from north, in [0, 180).
 */
typedef struct UlraEllipse {
  double center_x;
  double center_y;
  double semi_major;
  double semi_minor;
  double rotation_deg;
  double axis_ratio;
} UlraEllipse;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *ulra_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ulra_version(void);

/**
 * Builds a matrix from `m` strictly increasing region ids and `m × 144`
 * row-major nonnegative integral counts.
 *
 * # Safety
 * `region_ids` must point to `m` values and `counts` to `m * 144` values;
 * `out` must be a valid pointer.
 */
enum UlraStatus ulra_matrix_new(const uintptr_t *region_ids,
                                const double *counts,
                                uintptr_t m,
                                struct UlraMatrix **out);

/**
 * Reads a matrix CSV file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum UlraStatus ulra_matrix_read_csv(const char *path, struct UlraMatrix **out);

/**
 * Writes a matrix CSV file.
 *
 * # Safety
 * `matrix` must be a live handle and `path` a NUL-terminated string.
 */
enum UlraStatus ulra_matrix_write_csv(const struct UlraMatrix *matrix, const char *path);

/**
 * Number of regions (rows); 0 for NULL.
 *
 * # Safety
 * `matrix` must be NULL or a live handle.
 */
uintptr_t ulra_matrix_rows(const struct UlraMatrix *matrix);

/**
 * Copies the region ids into `out` (at least `ulra_matrix_rows` entries).
 *
 * # Safety
 * `matrix` must be a live handle and `out` point to `len` writable values.
 */
enum UlraStatus ulra_matrix_region_ids(const struct UlraMatrix *matrix,
                                       uintptr_t *out,
                                       uintptr_t len);

/**
 * Releases a matrix; NULL is ignored.
 *
 * # Safety
 * `matrix` must be NULL or a handle not yet freed.
 */
void ulra_matrix_free(struct UlraMatrix *matrix);

/**
 * Decomposes a matrix.
 *
 * # Safety
 * `matrix` must be a live handle and `out` a valid pointer.
 */
enum UlraStatus ulra_svd_new(const struct UlraMatrix *matrix, struct UlraSvd **out);

/**
 * Number of singular values, `min(rows, 144)`; 0 for NULL.
 *
 * # Safety
 * `svd` must be NULL or a live handle.
 */
uintptr_t ulra_svd_len(const struct UlraSvd *svd);

/**
 * Copies the singular values, in nonincreasing order, into `out`.
 *
 * # Safety
 * `svd` must be a live handle and `out` point to `len` writable values.
 */
enum UlraStatus ulra_svd_singular_values(const struct UlraSvd *svd, double *out, uintptr_t len);

/**
 * Share of squared singular-value mass in the leading `r` values.
 *
 * # Safety
 * `svd` must be a live handle and `out` a valid pointer.
 */
enum UlraStatus ulra_energy_ratio(const struct UlraSvd *svd, uintptr_t r, double *out);

/**
 * Relative Frobenius error of the rank-`r` reconstruction of `matrix`
 * from its decomposition `svd`.
 *
 * # Safety
 * `matrix` and `svd` must be live handles and `out` a valid pointer.
 */
enum UlraStatus ulra_reconstruction_error(const struct UlraMatrix *matrix,
                                          const struct UlraSvd *svd,
                                          uintptr_t r,
                                          double *out);

/**
 * Smallest rank in `1..=r_max` whose energy is at least `energy` and
 * whose error is at most `error`.
 *
 * # Safety
 * `matrix` and `svd` must be live handles and `out` a valid pointer.
 */
enum UlraStatus ulra_suggest_rank(const struct UlraMatrix *matrix,
                                  const struct UlraSvd *svd,
                                  uintptr_t r_max,
                                  double energy,
                                  double error,
                                  uintptr_t *out);

/**
 * Releases a decomposition; NULL is ignored.
 *
 * # Safety
 * `svd` must be NULL or a handle not yet freed.
 */
void ulra_svd_free(struct UlraSvd *svd);

/**
 * Rank-`r` joint embedding from a decomposition.
 *
 * # Safety
 * `svd` must be a live handle and `out` a valid pointer.
 */
enum UlraStatus ulra_embedding_new(const struct UlraSvd *svd,
                                   uintptr_t r,
                                   struct UlraEmbedding **out);

/**
 * Embedding rank; 0 for NULL.
 *
 * # Safety
 * `embedding` must be NULL or a live handle.
 */
uintptr_t ulra_embedding_rank(const struct UlraEmbedding *embedding);

/**
 * Copies the `rows × rank` region coordinates, row-major.
 *
 * # Safety
 * `embedding` must be a live handle and `out` point to `len` writable values.
 */
enum UlraStatus ulra_embedding_region_coords(const struct UlraEmbedding *embedding,
                                             double *out,
                                             uintptr_t len);

/**
 * Copies the `144 × rank` demand-hour coordinates, row-major.
 *
 * # Safety
 * `embedding` must be a live handle and `out` point to `len` writable values.
 */
enum UlraStatus ulra_embedding_ttd_coords(const struct UlraEmbedding *embedding,
                                          double *out,
                                          uintptr_t len);

/**
 * Releases an embedding; NULL is ignored.
 *
 * # Safety
 * `embedding` must be NULL or a handle not yet freed.
 */
void ulra_embedding_free(struct UlraEmbedding *embedding);

/**
 * Spherical K-means over `m` points of dimension `dim` (row-major).
 * Writes one label per point and the final inertia (sum of cosine
 * distances). Results depend only on the inputs and `seed`.
 *
 * # Safety
 * `points` must hold `m * dim` values, `labels` point to `labels_len`
 * writable values and `inertia` be NULL or valid.
 */
enum UlraStatus ulra_kmeans(const double *points,
                            uintptr_t m,
                            uintptr_t dim,
                            uintptr_t k,
                            uint64_t seed,
                            uintptr_t restarts,
                            uintptr_t *labels,
                            uintptr_t labels_len,
                            double *inertia);

/**
 * Dunn, Davies–Bouldin and Silhouette indices (cosine distance) of a
 * labelling. Any of the outputs may be NULL.
 *
 * # Safety
 * `points` must hold `m * dim` values and `labels` `m` values.
 */
enum UlraStatus ulra_validity(const double *points,
                              uintptr_t m,
                              uintptr_t dim,
                              const uintptr_t *labels,
                              double *dunn,
                              double *davies_bouldin,
                              double *silhouette);

/**
 * Weighted standard deviational ellipse of `n` points.
 *
 * # Safety
 * `xs`, `ys` and `weights` must each hold `n` values and `out` be valid.
 */
enum UlraStatus ulra_deviational_ellipse(const double *xs,
                                         const double *ys,
                                         const double *weights,
                                         uintptr_t n,
                                         struct UlraEllipse *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* URBAN_LRA_H */
