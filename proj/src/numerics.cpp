#include "hals/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace hals {

RVec real_embed_vec(const CVec& v) {
  const auto n = v.size();
  RVec out(2 * n);
  out.head(n) = v.real();
  out.tail(n) = v.imag();
  return out;
}

RMat real_embed_mat(const CMat& m) {
  const auto r = m.rows();
  const auto c = m.cols();
  RMat out(2 * r, 2 * c);
  out.topLeftCorner(r, c) = m.real();
  out.topRightCorner(r, c) = -m.imag();
  out.bottomLeftCorner(r, c) = m.imag();
  out.bottomRightCorner(r, c) = m.real();
  return out;
}

CMat herm_toeplitz(const CVec& iota) {
  const auto n = iota.size();
  CMat out(n, n);
  const double diag = iota.size() > 0 ? iota[0].real() : 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    out(k, k) = diag;
    for (Eigen::Index l = 0; l < k; ++l) {
      out(k, l) = iota[k - l];
      out(l, k) = std::conj(iota[k - l]);
    }
  }
  return out;
}

CMat psd_project(const CMat& h) {
  CMat sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("psd_project: eigendecomposition failed");
  }
  RVec lam = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * lam.asDiagonal() *
         eig.eigenvectors().adjoint();
}

RMat orthonormal_range(const RMat& m, double tol) {
  if (m.size() == 0 || m.norm() == 0.0) {
    throw std::invalid_argument("orthonormal_range: zero matrix has no basis");
  }
  Eigen::JacobiSVD<RMat> svd(m, Eigen::ComputeThinU);
  const double cutoff = tol * svd.singularValues()[0];
  Eigen::Index rank = 0;
  while (rank < svd.singularValues().size() &&
         svd.singularValues()[rank] > cutoff) {
    ++rank;
  }
  return svd.matrixU().leftCols(rank);
}

namespace {

template <typename Mat>
Mat projector_impl(const Mat& m) {
  const auto n = m.rows();
  if (m.cols() == 0 || m.norm() == 0.0) {
    return Mat::Zero(n, n);
  }
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU);
  const double cutoff = 1e-10 * svd.singularValues()[0];
  Eigen::Index rank = 0;
  while (rank < svd.singularValues().size() &&
         svd.singularValues()[rank] > cutoff) {
    ++rank;
  }
  auto u = svd.matrixU().leftCols(rank);
  return u * u.adjoint();
}

}  // namespace

CMat projector(const CMat& m) { return projector_impl(m); }

RMat projector(const RMat& m) { return projector_impl(m); }

}  // namespace hals
