#ifndef DET_H
#define DET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every exported function.
typedef enum DetStatus {
    DET_STATUS_OK = 0,
    DET_STATUS_NULL_POINTER = 1,
    DET_STATUS_INVALID_ARGUMENT = 2,
    DET_STATUS_DIMENSION = 3,
    DET_STATUS_DOMAIN = 4,
    DET_STATUS_ZERO_DENSITY = 5,
    DET_STATUS_IO = 6,
    DET_STATUS_FORMAT = 7,
    DET_STATUS_BUFFER_TOO_SMALL = 8,
    DET_STATUS_PANIC = 9,
} DetStatus;

typedef enum DetOrder {
    DET_ORDER_CONSTANT = 0,
    DET_ORDER_LINEAR = 1,
} DetOrder;

typedef enum DetFitTest {
    DET_FIT_TEST_KOLMOGOROV = 0,
    DET_FIT_TEST_HALF_MASS = 1,
} DetFitTest;

// Opaque tree handle.
typedef struct DetTree DetTree;

// Construction parameters; obtain defaults from [`det_build_config_default`].
typedef struct DetBuildConfig {
    // A `DetOrder` value.
    int32_t order;
    // A `DetFitTest` value.
    int32_t fit_test;
    // Nonzero enables the pairwise quadrant independence test.
    int32_t pairwise_independence;
    double alpha;
    size_t min_leaf_count;
    size_t max_depth;
    double bounds_padding_rel;
} DetBuildConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent failure on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *det_last_error(void);

struct DetBuildConfig det_build_config_default(void);

// Builds a tree from `rows * dims` row-major samples. `config` may be NULL
// for defaults.
//
// # Safety
// `data` must point to `rows * dims` doubles, `config` to a valid config or
// be NULL, and `out` to writable storage for a handle.
enum DetStatus det_tree_build(const double *data,
                              size_t rows,
                              size_t dims,
                              const struct DetBuildConfig *config,
                              struct DetTree **out);

// Reads a tree document from `path`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum DetStatus det_tree_load(const char *path, struct DetTree **out);

// Writes `tree` as a JSON document to `path`.
//
// # Safety
// `tree` must be a live handle and `path` a NUL-terminated string.
enum DetStatus det_tree_save(const struct DetTree *tree, const char *path);

// Parses a tree from a NUL-terminated JSON document.
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum DetStatus det_tree_from_json(const char *json, struct DetTree **out);

// Serializes `tree` into `buf` with a trailing NUL. `len_out` receives the
// document length without the NUL, also when the buffer is too small; pass
// a NULL `buf` with `capacity` 0 to query it.
//
// # Safety
// `buf` must have room for `capacity` bytes; `len_out` must be writable.
enum DetStatus det_tree_to_json(const struct DetTree *tree,
                                char *buf,
                                size_t capacity,
                                size_t *len_out);

// Releases a handle. NULL is ignored.
//
// # Safety
// `tree` must come from this library and not be used afterwards.
void det_tree_free(struct DetTree *tree);

// # Safety
// `tree` must be a live handle and `out` writable.
enum DetStatus det_tree_dims(const struct DetTree *tree, size_t *out);

// # Safety
// `tree` must be a live handle and `out` writable.
enum DetStatus det_tree_leaf_count(const struct DetTree *tree, size_t *out);

// Number of samples the tree was built from.
//
// # Safety
// `tree` must be a live handle and `out` writable.
enum DetStatus det_tree_sample_size(const struct DetTree *tree, uint64_t *out);

// Density estimate at `x` (length `dims`); zero outside the root cuboid.
//
// # Safety
// `x` must point to `dims` doubles and `out` be writable.
enum DetStatus det_tree_density(const struct DetTree *tree,
                                const double *x,
                                size_t dims,
                                double *out);

// Estimated marginal density of the conditioned coordinates.
//
// # Safety
// `cond_dims` and `cond_values` must each hold `cond_len` entries.
enum DetStatus det_tree_marginal_estimate(const struct DetTree *tree,
                                          const size_t *cond_dims,
                                          const double *cond_values,
                                          size_t cond_len,
                                          double *out);

// Draws `count` samples into `out` (`capacity` doubles, row-major).
//
// # Safety
// `out` must have room for `capacity` doubles.
enum DetStatus det_tree_sample(const struct DetTree *tree,
                               uint64_t seed,
                               size_t count,
                               double *out,
                               size_t capacity);

// Draws `count` rows with the coordinates in `cond_dims` fixed to
// `cond_values`. Rows span all dimensions.
//
// # Safety
// Condition arrays must hold `cond_len` entries and `out` must have room for
// `capacity` doubles.
enum DetStatus det_tree_sample_conditional(const struct DetTree *tree,
                                           const size_t *cond_dims,
                                           const double *cond_values,
                                           size_t cond_len,
                                           uint64_t seed,
                                           size_t count,
                                           double *out,
                                           size_t capacity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DET_H */
