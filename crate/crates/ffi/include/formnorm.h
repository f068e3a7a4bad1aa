#ifndef FORMNORM_H
#define FORMNORM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>
#include <stddef.h>

typedef enum FormnormStatus {
  FORMNORM_STATUS_OK = 0,
  FORMNORM_STATUS_NULL_POINTER = 1,
  FORMNORM_STATUS_INVALID_INPUT = 2,
  FORMNORM_STATUS_INVALID_UTF8 = 3,
  FORMNORM_STATUS_PARSE = 4,
  FORMNORM_STATUS_CONFIG = 5,
  FORMNORM_STATUS_OUT_OF_DOMAIN = 6,
  FORMNORM_STATUS_NUMERICAL = 7,
  FORMNORM_STATUS_REJECTED_PAIR = 8,
  // The suite ran but at least one verifier failed; the report is still
  // returned.
  FORMNORM_STATUS_VERIFICATION_FAILED = 9,
  FORMNORM_STATUS_BUFFER_TOO_SMALL = 10,
  FORMNORM_STATUS_IO = 11,
  FORMNORM_STATUS_PANIC = 12,
} FormnormStatus;

typedef enum FormnormOscillationKind {
  FORMNORM_OSCILLATION_KIND_BMO = 0,
  FORMNORM_OSCILLATION_KIND_LIPSCHITZ = 1,
} FormnormOscillationKind;

typedef struct FormnormDomain FormnormDomain;

typedef struct FormnormForm FormnormForm;

typedef struct FormnormYoung FormnormYoung;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *formnorm_version(void);

// Message of the last failed call on this thread, or an empty string.
// Valid until the next call into the library on the same thread.
const char *formnorm_last_error_message(void);

// Axis-aligned box `[lower, upper]` in `dims` dimensions with
// `resolution` Gauss–Legendre nodes per axis.
//
// # Safety
// `lower` and `upper` point to `dims` doubles; `out` is writable.
enum FormnormStatus formnorm_domain_new_box(uintptr_t dims,
                                            const double *lower,
                                            const double *upper,
                                            uintptr_t resolution,
                                            struct FormnormDomain **out);

// Euclidean ball.
//
// # Safety
// `center` points to `dims` doubles; `out` is writable.
enum FormnormStatus formnorm_domain_new_ball(uintptr_t dims,
                                             const double *center,
                                             double radius,
                                             uintptr_t resolution,
                                             struct FormnormDomain **out);

// # Safety
// `domain` is null or a handle from `formnorm_domain_new_*` not yet freed.
void formnorm_domain_free(struct FormnormDomain *domain);

// Young function from a spec such as `power:2`, `power_log:1.5` or
// `custom:t^3/(1 + t)`.
//
// # Safety
// `spec` is a NUL-terminated string; `out` is writable.
enum FormnormStatus formnorm_young_new(const char *spec, struct FormnormYoung **out);

// # Safety
// `young` is null or a live handle from `formnorm_young_new`.
void formnorm_young_free(struct FormnormYoung *young);

// Form on `domain` from a spec such as `poly:x1`, `const:dx1`,
// `form:1:x2;x1` or `corpus:trigonometric`. The form keeps its own copy
// of the domain.
//
// # Safety
// `domain` is a live handle, `spec` a NUL-terminated string, `out` writable.
enum FormnormStatus formnorm_form_new(const struct FormnormDomain *domain,
                                      const char *spec,
                                      struct FormnormForm **out);

// # Safety
// `form` is null or a live handle from `formnorm_form_new`.
void formnorm_form_free(struct FormnormForm *form);

// Degree and number of coefficients of a form.
//
// # Safety
// `form` is a live handle; the outputs are writable.
enum FormnormStatus formnorm_form_shape(const struct FormnormForm *form,
                                        uintptr_t *degree,
                                        uintptr_t *coefficients);

// Coefficients of the form at `x`, in increasing multi-index order.
// `written` receives the coefficient count even when the buffer is too
// small.
//
// # Safety
// `x` points to `dims` doubles, `coeffs` to `capacity` doubles, `written`
// is writable.
enum FormnormStatus formnorm_form_evaluate(const struct FormnormForm *form,
                                           const double *x,
                                           uintptr_t dims,
                                           double *coeffs,
                                           uintptr_t capacity,
                                           uintptr_t *written);

// `‖u‖_p` over the form's domain.
//
// # Safety
// `form` is a live handle; `out` is writable.
enum FormnormStatus formnorm_lp_norm(const struct FormnormForm *form, double p, double *out);

// Luxemburg norm over the form's domain. `infinite` (optional) is set to
// 1 when no finite λ is admissible, in which case `out` is `+∞`.
//
// # Safety
// `form` and `young` are live handles; `out` is writable; `infinite` is
// null or writable.
enum FormnormStatus formnorm_luxemburg_norm(const struct FormnormForm *form,
                                            const struct FormnormYoung *young,
                                            double *out,
                                            int *infinite);

// L^φ-BMO or L^φ-Lipschitz norm over the first `count` balls of the
// deterministic family with `σB ⊂ Ω`. `k` is ignored for BMO.
//
// # Safety
// `form` and `young` are live handles; `out` is writable.
enum FormnormStatus formnorm_oscillation_norm(const struct FormnormForm *form,
                                              const struct FormnormYoung *young,
                                              enum FormnormOscillationKind kind,
                                              double k,
                                              double sigma,
                                              uintptr_t count,
                                              double *out);

// Largest coefficient of `u − d(Tu) − T(du)` on a `per_axis`ⁿ grid of
// interior test points.
//
// # Safety
// `form` is a live handle; `out` is writable.
enum FormnormStatus formnorm_decomposition_residual(const struct FormnormForm *form,
                                                    uintptr_t per_axis,
                                                    double *out);

// Run the verification suite for a TOML configuration (empty string for
// the defaults) and return the JSON report in `*json`. Returns
// `VerificationFailed` with the report set when a verifier failed.
//
// # Safety
// `config_toml` is a NUL-terminated string; `json` is writable.
enum FormnormStatus formnorm_run_suite(const char *config_toml, char **json);

// # Safety
// `s` is null or a string returned by this library, not yet freed.
void formnorm_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FORMNORM_H */
