/* C interface to the curved-tube solver. Every call returns a CtStatus;
   ct_last_error_message() explains the most recent failure on the calling thread. */

#ifndef CURVED_TUBE_H
#define CURVED_TUBE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum CtCurvatureKind {
  CT_CURVATURE_KIND_ZERO = 0,
  // p0 = value
  CT_CURVATURE_KIND_CONSTANT = 1,
  // p0 = height, p1 = width
  CT_CURVATURE_KIND_BUMP = 2,
  // p0 = amplitude, p1 = sigma
  CT_CURVATURE_KIND_GAUSSIAN = 3,
  // p0 = height, p1 = half width
  CT_CURVATURE_KIND_HAT = 4,
  // p0 = amplitude
  CT_CURVATURE_KIND_SIGN_CHANGING = 5,
  // p0 = value, p1 = arc length
  CT_CURVATURE_KIND_ARC = 6,
} CtCurvatureKind;

typedef enum CtSectionKind {
  // p0 = half width (d = 2)
  CT_SECTION_KIND_INTERVAL = 0,
  // p0 × p1 (d = 3)
  CT_SECTION_KIND_RECTANGLE = 1,
  // p0 = radius (d = 3)
  CT_SECTION_KIND_DISK = 2,
} CtSectionKind;

typedef enum CtStatus {
  CT_STATUS_OK = 0,
  CT_STATUS_NULL_ARGUMENT = 1,
  CT_STATUS_INVALID_ARGUMENT = 2,
  CT_STATUS_CONFIG = 3,
  CT_STATUS_ASSUMPTION_VIOLATION = 4,
  CT_STATUS_GEOMETRY = 5,
  CT_STATUS_NUMERIC = 6,
  CT_STATUS_IO = 7,
  CT_STATUS_BUFFER_TOO_SMALL = 8,
  CT_STATUS_PANIC = 9,
} CtStatus;

typedef enum CtVariant {
  CT_VARIANT_FORM = 0,
  CT_VARIANT_SCHROEDINGER = 1,
} CtVariant;

typedef enum CtVerdict {
  CT_VERDICT_CERTIFIED = 0,
  CT_VERDICT_NOT_CERTIFIED = 1,
  CT_VERDICT_INDETERMINATE = 2,
} CtVerdict;

// Opaque tube handle.
typedef struct CtTube CtTube;

// One curvature function κᵢ.
typedef struct CtCurvature {
  enum CtCurvatureKind kind;
  double p0;
  double p1;
} CtCurvature;

typedef struct CtSection {
  enum CtSectionKind kind;
  double p0;
  double p1;
} CtSection;

typedef struct CtTubeInfo {
  size_t dimension;
  double radius;
  double kappa1_sup;
  double c_minus;
  double c_plus;
  // Lowest Dirichlet eigenvalue of the cross-section.
  double mu1;
  // The frame is tabulated on [frame_lo, frame_hi].
  double frame_lo;
  double frame_hi;
} CtTubeInfo;

typedef struct CtCertificate {
  enum CtVerdict verdict;
  // First n with Q₁ < 0, or 0.
  uint64_t certified_at;
  // Last n evaluated.
  uint64_t n;
  double q0;
  double q1;
  double q2;
  double epsilon;
  double min_value;
} CtCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Tube in dimension `count + 1` with curvatures κ₁..κ_count, the frame
// tabulated on [−reach, reach] from the identity at s = 0.
//
// # Safety
// `curvatures` must point to `count` elements; `section` and `out` must be valid.
enum CtStatus ct_tube_new(const struct CtCurvature *curvatures,
                          size_t count,
                          const struct CtSection *section,
                          double reach,
                          struct CtTube **out);

// Planar strip of half-width `half_width` about a curve of curvature `kappa`.
//
// # Safety
// `out` must be a valid pointer.
enum CtStatus ct_tube_new_strip(struct CtCurvature kappa, double half_width, struct CtTube **out);

// Tube described by a run config in TOML. Relative paths resolve against
// `base_dir`, or the working directory when it is null.
//
// # Safety
// `config_toml` must be a NUL-terminated string and `out` a valid pointer.
enum CtStatus ct_tube_from_config(const char *config_toml,
                                  const char *base_dir,
                                  struct CtTube **out);

// # Safety
// `tube` must come from a constructor of this library and not be freed twice.
void ct_tube_free(struct CtTube *tube);

// # Safety
// `tube` and `info` must be valid pointers.
enum CtStatus ct_tube_info(const struct CtTube *tube, struct CtTubeInfo *info);

// The `k` lowest eigenvalues on (−L, L) × ω at spacings `ds`, `du`, written to
// `values` (capacity `capacity`). `written` receives the count.
//
// # Safety
// `values` must hold `capacity` doubles; `tube` and `written` must be valid.
enum CtStatus ct_lowest_eigenvalues(const struct CtTube *tube,
                                    double half_length,
                                    double ds,
                                    double du,
                                    enum CtVariant variant,
                                    size_t k,
                                    uint64_t seed,
                                    double *values,
                                    size_t capacity,
                                    size_t *written);

// Walk the certificate schedule (the default one when `schedule` is null)
// and report the last evaluated n.
//
// # Safety
// `schedule` must hold `len` values when non-null; `tube` and `out` must be valid.
enum CtStatus ct_certify(const struct CtTube *tube,
                         const uint64_t *schedule,
                         size_t len,
                         struct CtCertificate *out);

// Run a config file like `curved-tube run`. `out_dir` may be null for the
// config's own output directory. `exit_status`, when non-null, receives the
// CLI exit status (0, 2, 3 or 4).
//
// # Safety
// String arguments must be NUL-terminated.
enum CtStatus ct_run_config_file(const char *path, const char *out_dir, int32_t *exit_status);

// Copy the calling thread's last error message, NUL-terminated and truncated
// to `capacity`. Returns the full length including the NUL; 1 means no error.
//
// # Safety
// `buf` must hold `capacity` bytes, or be null with `capacity` 0.
size_t ct_last_error_message(char *buf, size_t capacity);

// Static name of a status code.
const char *ct_status_name(enum CtStatus status);

const char *ct_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CURVED_TUBE_H */
