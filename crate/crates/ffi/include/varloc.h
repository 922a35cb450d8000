#ifndef VARLOC_H
#define VARLOC_H

/* Generated by cbindgen from crates/ffi. Do not edit by hand. */

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum VarlocStatus {
  VARLOC_STATUS_OK = 0,
  // A required pointer argument was NULL.
  VARLOC_STATUS_NULL_POINTER = 1,
  // An argument was outside the operation's domain.
  VARLOC_STATUS_INVALID_ARGUMENT = 2,
  // The data admit no estimate from the requested solver.
  VARLOC_STATUS_DEGENERATE = 3,
  // The request exceeds a computation budget.
  VARLOC_STATUS_RESOURCE_LIMIT = 4,
  // Malformed JSON or text encoding.
  VARLOC_STATUS_PARSE = 5,
  VARLOC_STATUS_IO = 6,
  // An internal invariant failed; the call had no effect.
  VARLOC_STATUS_PANIC = 7,
} VarlocStatus;

typedef enum VarlocProvenanceKind {
  VARLOC_PROVENANCE_KIND_SINGLETON = 0,
  VARLOC_PROVENANCE_KIND_CIRCLE = 1,
  VARLOC_PROVENANCE_KIND_ELLIPSE = 2,
  VARLOC_PROVENANCE_KIND_HALF_HYPERBOLA = 3,
  VARLOC_PROVENANCE_KIND_ORACLE = 4,
  VARLOC_PROVENANCE_KIND_BASELINE = 5,
} VarlocProvenanceKind;

// Opaque scenario handle.
typedef struct VarlocScenario VarlocScenario;

// A location estimate.
//
// `index_a`/`index_b` hold the anchor (singleton, circle), the anchor pair
// (ellipse, half-hyperbola) or the lattice row/column (oracle); unused
// fields are zero. `grid_index` is the curve sample index where relevant.
typedef struct VarlocEstimate {
  double x_km;
  double y_km;
  double objective_km;
  enum VarlocProvenanceKind kind;
  size_t index_a;
  size_t index_b;
  size_t grid_index;
} VarlocEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates a scenario from `m` anchors given as interleaved `x, y` pairs
// (`2 m` doubles, km), `m` measurements (km) and the outlier count.
//
// # Safety
// `anchors_xy` must point to `2 * m` doubles and `measurements` to `m`
// doubles; `out` must be writable. On success `*out` owns a new handle.
enum VarlocStatus varloc_scenario_new(const double *anchors_xy,
                                      const double *measurements,
                                      size_t m,
                                      size_t outlier_count,
                                      struct VarlocScenario **out);

// Parses a scenario from a NUL-terminated UTF-8 JSON document of the form
// `{"anchors": [[x, y], ...], "measurements": [...], "outlier_count": L}`.
//
// # Safety
// `json` must be a valid C string and `out` writable.
enum VarlocStatus varloc_scenario_from_json(const char *json, struct VarlocScenario **out);

// Releases a handle. NULL is ignored.
//
// # Safety
// `handle` must be NULL or a pointer from this library not yet freed.
void varloc_scenario_free(struct VarlocScenario *handle);

// Number of anchors, or 0 for NULL.
//
// # Safety
// `handle` must be NULL or a live handle.
size_t varloc_scenario_len(const struct VarlocScenario *handle);

// Percentile objective of the scenario at `(x_km, y_km)`.
//
// # Safety
// `handle` must be a live handle and `out` writable.
enum VarlocStatus varloc_objective(const struct VarlocScenario *handle,
                                   double x_km,
                                   double y_km,
                                   double *out);

// `(L+1)`-th largest of `len` values.
//
// # Safety
// `values` must point to `len` doubles and `out` be writable.
enum VarlocStatus varloc_percentile(const double *values,
                                    size_t len,
                                    size_t outlier_count,
                                    double *out);

// Robust percentile estimate with `grid` samples per curve (`grid >= 2`).
//
// # Safety
// `handle` must be a live handle and `out` writable.
enum VarlocStatus varloc_rpte(const struct VarlocScenario *handle,
                              size_t grid,
                              struct VarlocEstimate *out);

// Squared-range least-squares estimate.
//
// # Safety
// `handle` must be a live handle and `out` writable.
enum VarlocStatus varloc_srls(const struct VarlocScenario *handle, struct VarlocEstimate *out);

// Gradient-descent range least-squares estimate.
//
// # Safety
// `handle` must be a live handle and `out` writable.
enum VarlocStatus varloc_gd(const struct VarlocScenario *handle,
                            size_t max_iters,
                            double grad_tol,
                            struct VarlocEstimate *out);

// Dense lattice search with pitch `pitch_km` over the default box.
//
// # Safety
// `handle` must be a live handle and `out` writable.
enum VarlocStatus varloc_oracle_grid(const struct VarlocScenario *handle,
                                     double pitch_km,
                                     struct VarlocEstimate *out);

// Copies the calling thread's last error message into `buf` as a
// NUL-terminated string, truncating to `len - 1` bytes. Returns the full
// message length in bytes (excluding the NUL), so a return value `>= len`
// means the copy was truncated. `buf` may be NULL when `len` is 0.
//
// # Safety
// `buf` must be writable for `len` bytes.
size_t varloc_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *varloc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VARLOC_H */
