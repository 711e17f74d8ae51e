#ifndef KINKWIRE_H
#define KINKWIRE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum KwStatus {
  KW_STATUS_OK = 0,
  KW_STATUS_NULL_POINTER = 1,
  KW_STATUS_INVALID_ARGUMENT = 2,
  KW_STATUS_DOMAIN = 3,
  KW_STATUS_GRID = 4,
  KW_STATUS_BOUNDARY = 5,
  KW_STATUS_NUMERICAL = 6,
  KW_STATUS_BUFFER_TOO_SMALL = 7,
  KW_STATUS_INTERNAL = 8,
} KwStatus;

// A bent-wire problem: geometry, boundary conditions and discretization.
typedef struct KwProblem KwProblem;

// The lowest eigenpairs of one discretized operator.
typedef struct KwSpectrum KwSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length without the NUL, or
// 0 when there is no error.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t kw_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *kw_version(void);

// A wire on [a, b] nm whose curvature K|s|^(−alpha) turns the tangent by
// π − theta. Dirichlet ends; `k` eigenpairs on `n_cells` cells.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum KwStatus kw_problem_new(double alpha,
                             double theta,
                             double a,
                             double b,
                             double mass_ratio,
                             size_t n_cells,
                             size_t k,
                             struct KwProblem **out);

// Switch to Robin ends rho_a·ψ + ψ' = 0 at a and rho_b·ψ + ψ' = 0 at b.
//
// # Safety
// `problem` must be a live handle from [`kw_problem_new`].
enum KwStatus kw_problem_set_robin(struct KwProblem *problem, double rho_a, double rho_b);

// Back to Dirichlet ends.
//
// # Safety
// `problem` must be a live handle from [`kw_problem_new`].
enum KwStatus kw_problem_set_dirichlet(struct KwProblem *problem);

// # Safety
// `problem` must be null or a live handle; it is invalid afterwards.
void kw_problem_free(struct KwProblem *problem);

// Finite-difference spectrum of the wire with curvature smoothed at scale
// `epsilon` nm.
//
// # Safety
// `problem` must be a live handle and `out` a valid handle slot.
enum KwStatus kw_solve_regularized(const struct KwProblem *problem,
                                   double epsilon,
                                   struct KwSpectrum **out);

// Spectrum of the unsmoothed wire in weak form. Dirichlet ends only, and
// s = 0 must fall on a cell edge.
//
// # Safety
// `problem` must be a live handle and `out` a valid handle slot.
enum KwStatus kw_solve_singular(const struct KwProblem *problem, struct KwSpectrum **out);

// Sweep the smoothing scale over `epsilons` and extrapolate the ground level
// to ε → 0.
//
// # Safety
// `problem` must be a live handle, `epsilons` must hold `n_epsilons` values
// and `limit`, `uncertainty` must be writable.
enum KwStatus kw_ground_limit(const struct KwProblem *problem,
                              const double *epsilons,
                              size_t n_epsilons,
                              double *limit,
                              double *uncertainty);

// Number of eigenpairs held.
//
// # Safety
// `spectrum` must be null or a live handle.
size_t kw_spectrum_len(const struct KwSpectrum *spectrum);

// Number of mesh nodes per eigenfunction.
//
// # Safety
// `spectrum` must be null or a live handle.
size_t kw_spectrum_nodes(const struct KwSpectrum *spectrum);

// Copy the eigenvalues (meV, ascending) into `buf`.
//
// # Safety
// `spectrum` must be a live handle and `buf` must hold `len` doubles.
enum KwStatus kw_spectrum_eigenvalues(const struct KwSpectrum *spectrum, double *buf, size_t len);

// Copy the mesh nodes (nm) into `buf`.
//
// # Safety
// `spectrum` must be a live handle and `buf` must hold `len` doubles.
enum KwStatus kw_spectrum_grid(const struct KwSpectrum *spectrum, double *buf, size_t len);

// Copy eigenfunction `index` (normalized so h·Σψ² = 1) into `buf`.
//
// # Safety
// `spectrum` must be a live handle and `buf` must hold `len` doubles.
enum KwStatus kw_spectrum_eigenfunction(const struct KwSpectrum *spectrum,
                                        size_t index,
                                        double *buf,
                                        size_t len);

// # Safety
// `spectrum` must be null or a live handle; it is invalid afterwards.
void kw_spectrum_free(struct KwSpectrum *spectrum);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KINKWIRE_H */
