#pragma once

#include <vector>

#include "hals/ofdm.hpp"
#include "hals/types.hpp"

namespace hals {

struct HalsOptions {
  double tau = 1.0;     ///< atomic penalty
  double lambda = 1.0;  ///< ridge penalty on the diffuse coordinates
  double admm_rho = 2.0;
  double tol_abs = 1e-7;
  double tol_rel = 1e-5;
  int max_iter = 5000;
  bool diffuse_enabled = true;
  /// Rescale rho (factor 2, checked every 100 iterations) when the primal
  /// and dual residuals drift apart.
  bool residual_balancing = true;

  void validate() const;
};

struct SolverDiagnostics {
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double rho_final = 0.0;
  /// Best primal value seen so far, recorded every 50 iterations.
  std::vector<double> primal_checkpoints;
};

struct HalsSolution {
  CVec h_s;
  CVec c_d;
  double t = 0.0;  ///< SDP scalar; ||h_s||_A = (t + iota_1)/2 at the optimum
  CVec iota;       ///< Toeplitz generator, iota[0] real
  CVec z;          ///< dual point r - h_s - D c_d
  double primal_value = 0.0;
  double dual_value = 0.0;
  int iterations = 0;
  bool converged = false;
  SolverDiagnostics diag;
};

/// Optimality residuals of a solution. dual_norm_residual is absolute
/// (excess of ||z||_A^* over tau); the other two are relative.
struct KktReport {
  double dual_norm_residual = 0.0;
  double ridge_residual = 0.0;
  double alignment_residual = 0.0;
  bool energy_bound_ok = true;
};

/// Closed-form ridge coordinates (D^H D + lambda I)^{-1} D^H (r - h_s).
CVec ridge_diffuse(const CVec& r, const CVec& h_s, const CMat& D,
                   double lambda);

/// Weighting left after minimizing the diffuse coordinates in closed form:
/// W = I - D (D^H D + lambda I)^{-1} D^H. Hermitian with eigenvalues in
/// (0, 1]; a zero-width D gives the identity.
CMat eliminate_diffuse(const CMat& D, double lambda);

/// Minimize 0.5||r - h_s - D c_d||^2 + tau ||h_s||_A + 0.5 lambda ||c_d||^2
/// over (h_s, c_d). The diffuse block is eliminated in closed form and the
/// remaining weighted atomic denoiser is solved by ADMM on its equivalent
/// Toeplitz-bordered semidefinite program. Non-convergence at max_iter is
/// reported through the converged flag, never thrown.
HalsSolution solve_hals(const Observation& obs, const CMat& D,
                        const HalsOptions& opts);

/// Pure atomic-norm denoiser: solve_hals with a zero-width diffuse basis.
HalsSolution solve_anm(const Observation& obs, const HalsOptions& opts);

/// z = r - h_s - D c_d; solves the dual problem at the primal optimum.
CVec recover_dual(const Observation& obs, const CMat& D,
                  const HalsSolution& sol);

/// Dual objective 0.5||r||^2 - 0.5||r - z||^2 - (1/2 lambda)||D^H z||^2.
double dual_objective(const CVec& z, const Observation& obs, const CMat& D,
                      double lambda);

/// Evaluate the stationarity residuals and the diffuse energy bound
/// ||c_d|| <= sqrt(L) tau / lambda at a solution.
KktReport kkt_report(const Observation& obs, const CMat& D,
                     const HalsOptions& opts, const HalsSolution& sol);

struct Hyperparams {
  double tau = 0.0;
  double lambda = 0.0;
};

/// tau = 1.2 sigma sqrt(N ln N), lambda = sqrt(L) sigma / ||c_d||-hint.
Hyperparams default_hyperparams(double sigma, int n, int l,
                                double cd_norm_hint);

}  // namespace hals
