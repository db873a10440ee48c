#ifndef FRACWAVE_H
#define FRACWAVE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FwStatus {
  FW_STATUS_OK = 0,
  FW_STATUS_NULL_POINTER = 1,
  FW_STATUS_DOMAIN = 2,
  FW_STATUS_INDEX = 3,
  FW_STATUS_NOT_CONVERGED = 4,
  FW_STATUS_SOLVER = 5,
  FW_STATUS_CFL = 6,
  FW_STATUS_DIVERGED = 7,
  FW_STATUS_CONFIG = 8,
  FW_STATUS_IO = 9,
  FW_STATUS_BUFFER_TOO_SMALL = 10,
  FW_STATUS_PANIC = 11,
} FwStatus;

// Which weight family to copy out of a scheme.
typedef enum FwWeights {
  FW_WEIGHTS_OMEGA = 0,
  FW_WEIGHTS_W0 = 1,
  FW_WEIGHTS_W1 = 2,
} FwWeights;

// Convergence case selector.
typedef enum FwCase {
  FW_CASE_SMOOTH1D = 0,
  FW_CASE_SMOOTH2D = 1,
  FW_CASE_NONSMOOTH1D = 2,
} FwCase;

// Finished convergence study.
typedef struct FwConvergence FwConvergence;

// BDF2 convolution quadrature weights for one `(γ, κ, N)`.
typedef struct FwCqScheme FwCqScheme;

// Source callback `f(t, user_data)`.
typedef double (*FwSourceFn)(double t, void *user_data);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread, NUL-terminated and
// truncated to `len` bytes. Returns the full message length plus one.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t fw_last_error_message(char *buf, size_t len);

// Damping coefficient `a_γ` for `γ ∈ (−1, 1) \ {0}` and `α₀ > 0`.
//
// # Safety
// `out` must be valid for one write.
enum FwStatus fw_a_gamma(double gamma, double alpha0, double *out);

// Builds the weights `ω_0 … ω_N` and the correction weights.
//
// # Safety
// `out` must be valid for one write.
enum FwStatus fw_cq_new(double gamma, double kappa, size_t steps, struct FwCqScheme **out);

// # Safety
// `scheme` must be null or come from [`fw_cq_new`] and not be freed twice.
void fw_cq_free(struct FwCqScheme *scheme);

// Number of weights per family, `N + 1`; zero for a null handle.
//
// # Safety
// `scheme` must be null or a live handle.
size_t fw_cq_len(const struct FwCqScheme *scheme);

// Copies one weight family into `out`, which must hold `fw_cq_len` values.
//
// # Safety
// `scheme` must be a live handle and `out` valid for `len` writes.
enum FwStatus fw_cq_weights(const struct FwCqScheme *scheme,
                            enum FwWeights which,
                            double *out,
                            size_t len);

// Applies the quadrature to `g_0 … g_{len−1}` at step `n < len`; with
// `corrected` set the correction weights are added.
//
// # Safety
// `scheme` must be a live handle, `g` valid for `len` reads and `out`
// for one write.
enum FwStatus fw_cq_apply(const struct FwCqScheme *scheme,
                          const double *g,
                          size_t len,
                          size_t n,
                          bool corrected,
                          double *out);

// Solves `u'' + λu + a ∂t^{γ+1}u = f` on `[0, T]` with `m` substeps by
// product integration and writes `u` at the `m + 1` grid points. A null
// `f` means zero forcing.
//
// # Safety
// `out_u` must be valid for `len` writes; `f` is called with `user_data`
// from the calling thread only.
enum FwStatus fw_volterra_solve(double gamma,
                                double lambda,
                                double a_gamma,
                                FwSourceFn f,
                                void *user_data,
                                double u0,
                                double v0,
                                double t_final,
                                size_t m,
                                double *out_u,
                                size_t len);

// Runs a convergence study with `levels ≥ 3` and the case's default
// coupling and coarsest step.
//
// # Safety
// `out` must be valid for one write.
enum FwStatus fw_convergence_run(enum FwCase case_,
                                 double gamma,
                                 double alpha0,
                                 bool corrected,
                                 size_t levels,
                                 struct FwConvergence **out);

// # Safety
// `report` must be null or come from [`fw_convergence_run`].
void fw_convergence_free(struct FwConvergence *report);

// Number of levels; zero for a null handle.
//
// # Safety
// `report` must be null or a live handle.
size_t fw_convergence_levels(const struct FwConvergence *report);

// Copies `h`, `κ` and the error in the case's norm per level. Any output
// pointer may be null to skip it.
//
// # Safety
// `report` must be a live handle and each non-null buffer valid for `len`
// writes.
enum FwStatus fw_convergence_errors(const struct FwConvergence *report,
                                    double *h,
                                    double *kappa,
                                    double *error,
                                    size_t len);

// Least-squares rate over all levels and the rate of the last two.
//
// # Safety
// `report` must be a live handle; outputs valid for one write each.
enum FwStatus fw_convergence_rate(const struct FwConvergence *report,
                                  double *global,
                                  double *last_two);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACWAVE_H */
