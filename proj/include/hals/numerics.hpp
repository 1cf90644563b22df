#pragma once

#include "hals/types.hpp"

namespace hals {

/// Stack a complex vector as [Re(v); Im(v)]. Length doubles, l2 norm is
/// preserved exactly up to rounding.
RVec real_embed_vec(const CVec& v);

/// Real block form [[Re M, -Im M], [Im M, Re M]]. The embedding is a
/// *-homomorphism: embed(A*B) = embed(A)*embed(B) and
/// embed(M)*embed_vec(v) = embed_vec(M*v).
RMat real_embed_mat(const CMat& m);

/// Hermitian Toeplitz matrix with `iota` as its first column. The imaginary
/// part of iota[0] is discarded so the diagonal stays real.
CMat herm_toeplitz(const CVec& iota);

/// Frobenius-nearest positive semidefinite matrix: symmetrize, then clip
/// negative eigenvalues to zero. Throws NumericalError if the
/// eigendecomposition fails.
CMat psd_project(const CMat& h);

/// Orthonormal basis for the column space of a real matrix. Singular values
/// below tol * sigma_max count as zero. Throws std::invalid_argument on an
/// all-zero input.
RMat orthonormal_range(const RMat& m, double tol = 1e-9);

/// Orthogonal projector onto the column space, P = M M^+ (pseudoinverse
/// based). A zero matrix yields the zero projector.
CMat projector(const CMat& m);

/// Real-matrix overload of the column-space projector.
RMat projector(const RMat& m);

}  // namespace hals
