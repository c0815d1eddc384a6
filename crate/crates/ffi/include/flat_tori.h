#ifndef FLAT_TORI_H
#define FLAT_TORI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every function.
 */
typedef enum FtStatus {
  FT_STATUS_OK = 0,
  FT_STATUS_NULL_POINTER = 1,
  FT_STATUS_INVALID_UTF8 = 2,
  FT_STATUS_PARSE = 3,
  FT_STATUS_INVALID_ARGUMENT = 4,
  FT_STATUS_CAP_EXCEEDED = 5,
  FT_STATUS_BUFFER_TOO_SMALL = 6,
  FT_STATUS_INTERNAL = 7,
  FT_STATUS_PANIC = 8,
} FtStatus;

/**
 * Opaque lattice handle.
 */
typedef struct FtLattice FtLattice;

/**
 * Resource limits; pass `NULL` wherever accepted to use the defaults.
 */
typedef struct FtLimits {
  uint64_t vector_cap;
  uint64_t work_cap;
} FtLimits;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or `NULL`. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ft_last_error(void);

/**
 * Default limits.
 */
struct FtLimits ft_default_limits(void);

/**
 * Parses a lattice description such as `"E8+E8"` or `"GAMMA16"`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FtStatus ft_lattice_parse(const char *spec, struct FtLattice **out);

/**
 * Releases a handle; `NULL` is ignored.
 *
 * # Safety
 * `handle` must come from [`ft_lattice_parse`] and not be used afterwards.
 */
void ft_lattice_free(struct FtLattice *handle);

/**
 * Ambient dimension.
 *
 * # Safety
 * `handle` and `out` must be valid pointers.
 */
enum FtStatus ft_lattice_dim(const struct FtLattice *handle, size_t *out);

/**
 * Determinant of the Gram matrix (integral lattices only).
 *
 * # Safety
 * `handle` and `out` must be valid pointers.
 */
enum FtStatus ft_lattice_discriminant(const struct FtLattice *handle, uint64_t *out);

/**
 * Writes 1 to `integral`/`even` when the lattice has the property, else 0.
 * Either output may be `NULL`.
 *
 * # Safety
 * `handle` must be valid; non-NULL outputs must be writable.
 */
enum FtStatus ft_lattice_predicates(const struct FtLattice *handle,
                                    int32_t *integral,
                                    int32_t *even);

/**
 * Number of lattice vectors of each norm `0..=bound`: `counts[n]` receives
 * the count for norm `n`, so `counts` must hold `bound + 1` entries.
 *
 * # Safety
 * `handle` must be valid and `counts` must point to `capacity` writable values.
 */
enum FtStatus ft_count_by_norm(const struct FtLattice *handle,
                               uint64_t bound,
                               const struct FtLimits *limits,
                               uint64_t *counts,
                               size_t capacity);

/**
 * `r_Λ(T)` for the row-major symmetric `dim × dim` integer matrix `t`.
 *
 * # Safety
 * `handle` and `out` must be valid and `t` must point to `dim * dim` values.
 */
enum FtStatus ft_representation_number(const struct FtLattice *handle,
                                       size_t dim,
                                       const int64_t *t,
                                       const struct FtLimits *limits,
                                       uint64_t *out);

/**
 * Runs the separating 4-torus construction and returns its JSON report.
 *
 * # Safety
 * `json` must be a valid pointer; release the result with [`ft_string_free`].
 */
enum FtStatus ft_milnor_demo_json(const struct FtLimits *limits, char **json);

/**
 * Releases a string returned by this library; `NULL` is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void ft_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLAT_TORI_H */
