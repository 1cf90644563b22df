#include "hals/bounds.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <vector>

#include "hals/numerics.hpp"

namespace hals {

namespace {

/// Solve K X = B for symmetric positive definite K, adding a scaled jitter
/// to the diagonal if the factorization breaks down.
RMat spd_solve(const RMat& k, const RMat& b, bool* jitter_used) {
  Eigen::LLT<RMat> llt(k);
  if (llt.info() == Eigen::Success) return llt.solve(b);
  if (jitter_used) *jitter_used = true;
  const double jitter = 1e-12 * k.trace() / static_cast<double>(k.rows());
  RMat k_j = k;
  for (int attempt = 0; attempt < 3; ++attempt) {
    k_j.diagonal().array() += jitter * std::pow(10.0, attempt);
    llt.compute(k_j);
    if (llt.info() == Eigen::Success) return llt.solve(b);
  }
  throw NumericalError("spd_solve: covariance not positive definite");
}

/// trace of the pseudoinverse of a symmetric PSD matrix.
double trace_pinv(const RMat& b) {
  Eigen::SelfAdjointEigenSolver<RMat> eig(0.5 * (b + b.transpose()));
  if (eig.info() != Eigen::Success) {
    throw NumericalError("trace_pinv: eigendecomposition failed");
  }
  const double cutoff = 1e-10 * eig.eigenvalues().cwiseAbs().maxCoeff();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double lam = eig.eigenvalues()[i];
    if (lam > cutoff) acc += 1.0 / lam;
  }
  return acc;
}

double constrained_trace(const RMat& k_tilde, const RMat& u,
                         bool* jitter_used) {
  // trace{ U (U^T K^{-1} U)^+ U^T } = trace{ (U^T K^{-1} U)^+ } since
  // U^T U = I.
  const RMat kinv_u = spd_solve(k_tilde, u, jitter_used);
  const RMat b = u.transpose() * kinv_u;
  return trace_pinv(b);
}

/// Orthonormal eigenbasis of the eigenvalue-1 subspace of a projector.
RMat eigenvalue_one_basis(const RMat& q) {
  Eigen::SelfAdjointEigenSolver<RMat> eig(q);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigenvalue_one_basis: eigendecomposition failed");
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    if (eig.eigenvalues()[i] > 0.5) keep.push_back(i);
  }
  RMat u(q.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    u.col(static_cast<Eigen::Index>(i)) = eig.eigenvectors().col(keep[i]);
  }
  return u;
}

}  // namespace

CMat noise_covariance_sparse(const CMat& D, const CMat& K_d,
                             const Pilots& pilots, double sigma) {
  const auto n = pilots.s.size();
  if (D.cols() > 0 && (D.rows() != n || K_d.rows() != D.cols())) {
    throw std::invalid_argument("noise_covariance_sparse: dimension mismatch");
  }
  CMat cov = CMat::Zero(n, n);
  if (D.cols() > 0) cov = D * K_d * D.adjoint();
  for (Eigen::Index k = 0; k < n; ++k) {
    cov(k, k) += sigma * sigma / std::norm(pilots.s[k]);
  }
  return 0.5 * (cov + cov.adjoint());
}

double crb_sparse(const CrbInputs& in) {
  if (in.G.cols() == 0 || in.G.norm() == 0.0) {
    throw std::invalid_argument("crb_sparse: empty support basis");
  }
  const CMat k_s0 = noise_covariance_sparse(in.D, in.K_d, in.pilots, in.sigma);
  const RMat u = orthonormal_range(real_embed_mat(in.G));
  return 0.5 * constrained_trace(real_embed_mat(k_s0), u, nullptr);
}

RMat diffuse_constraint_projector(const CMat& D, const CVec& h_d,
                                  double rho2) {
  if (!(rho2 > 0)) {
    throw std::invalid_argument("diffuse_constraint_projector: rho2 must be > 0");
  }
  const double energy = h_d.squaredNorm();
  if (std::abs(energy - rho2) > 1e-8 * std::max(1.0, rho2)) {
    throw std::invalid_argument(
        "diffuse_constraint_projector: ||h_d||^2 disagrees with rho2");
  }
  const RMat d_tilde = real_embed_mat(D);
  const RMat p_d = projector(d_tilde);
  const RVec h_tilde = real_embed_vec(h_d);
  if ((p_d * h_tilde - h_tilde).norm() > 1e-8 * h_tilde.norm()) {
    throw std::invalid_argument(
        "diffuse_constraint_projector: h_d not in the range of D");
  }
  return p_d - (h_tilde * h_tilde.transpose()) / rho2;
}

double crb_diffuse_from_epsilon(double rho2, double epsilon) {
  return 2.0 * rho2 * (1.0 - 1.0 / std::sqrt(1.0 + epsilon / (2.0 * rho2)));
}

double crb_diffuse(const CrbInputs& in) {
  if (!(in.rho2 > 0)) {
    throw std::invalid_argument("crb_diffuse: rho2 must be > 0");
  }
  const CMat k_d0 = noise_covariance_sparse(in.G, in.K_s, in.pilots, in.sigma);
  const RMat u_n =
      eigenvalue_one_basis(diffuse_constraint_projector(in.D, in.h_d, in.rho2));
  const double epsilon = constrained_trace(real_embed_mat(k_d0), u_n, nullptr);
  return crb_diffuse_from_epsilon(in.rho2, epsilon);
}

CrbReport crb_report(const CrbInputs& in, std::optional<double> hs_energy,
                     std::optional<double> hd_energy) {
  CrbReport report;
  bool jitter = false;

  const CMat k_s0 = noise_covariance_sparse(in.D, in.K_d, in.pilots, in.sigma);
  const RMat u = orthonormal_range(real_embed_mat(in.G));
  report.crb_sparse = 0.5 * constrained_trace(real_embed_mat(k_s0), u, &jitter);

  if (in.rho2 > 0) {
    const CMat k_d0 = noise_covariance_sparse(in.G, in.K_s, in.pilots, in.sigma);
    const RMat u_n = eigenvalue_one_basis(
        diffuse_constraint_projector(in.D, in.h_d, in.rho2));
    report.epsilon = constrained_trace(real_embed_mat(k_d0), u_n, &jitter);
    report.crb_diffuse = crb_diffuse_from_epsilon(in.rho2, report.epsilon);
  }

  if (hs_energy && *hs_energy > 0) {
    report.ncrb_sparse = report.crb_sparse / *hs_energy;
  }
  if (in.rho2 > 0 && hd_energy && *hd_energy > 0) {
    report.ncrb_diffuse = report.crb_diffuse / *hd_energy;
  }
  report.jitter_used = jitter;
  return report;
}

}  // namespace hals
