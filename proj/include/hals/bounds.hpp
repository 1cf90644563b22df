#pragma once

#include <optional>

#include "hals/ofdm.hpp"
#include "hals/types.hpp"

namespace hals {

/// Everything the two component bounds need. K_s and K_d are the gain
/// covariances in the coordinates of G and D respectively; rho2 = ||h_d||^2
/// is the diffuse energy and h_d the true diffuse response.
struct CrbInputs {
  CMat G;
  CMat D;
  CMat K_s;
  CMat K_d;
  double sigma = 0.0;
  Pilots pilots;
  double rho2 = 0.0;
  CVec h_d;
};

struct CrbReport {
  double crb_sparse = 0.0;
  double crb_diffuse = 0.0;
  double epsilon = 0.0;
  std::optional<double> ncrb_sparse;   ///< crb_sparse / ||h_s*||^2
  std::optional<double> ncrb_diffuse;  ///< crb_diffuse / ||h_d*||^2
  bool jitter_used = false;
};

/// Covariance seen by the sparse component when the diffuse part is treated
/// as extra noise: D K_d D^H + sigma^2 S^{-1} (S^{-1})^H.
CMat noise_covariance_sparse(const CMat& D, const CMat& K_d,
                             const Pilots& pilots, double sigma);

/// MSE lower bound for subspace-unbiased estimation of h_s:
/// (1/2) trace{ U (U^T Ktilde^{-1} U)^+ U^T } with U an orthonormal basis
/// of the embedded range of G.
double crb_sparse(const CrbInputs& in);

/// Projector onto the embedded range of D minus the radial direction of
/// h_d; symmetric idempotent with trace 2L - 1. Throws std::invalid_argument
/// when h_d is not (numerically) in the range of D or its energy disagrees
/// with rho2.
RMat diffuse_constraint_projector(const CMat& D, const CVec& h_d, double rho2);

/// Norm-constrained bound 2 rho^2 (1 - 1/sqrt(1 + eps/(2 rho^2))).
double crb_diffuse_from_epsilon(double rho2, double epsilon);

/// MSE lower bound for the diffuse component under the range + energy
/// constraints, with the sparse part treated as extra noise.
double crb_diffuse(const CrbInputs& in);

/// Both bounds plus normalized versions when the component energies are
/// supplied (zero-energy components leave the normalized field unset).
CrbReport crb_report(const CrbInputs& in,
                     std::optional<double> hs_energy = std::nullopt,
                     std::optional<double> hd_energy = std::nullopt);

}  // namespace hals
