#pragma once

#include "qtn/common.hpp"

namespace qtn {

/// Thin SVD m = u * diag(sigma) * v. Columns of u and rows of v are
/// orthonormal; sigma is nonincreasing. Each column of u has its first
/// non-negligible entry real positive (v rows adjusted to match).
struct Svd {
  Matrix u;
  RealVector sigma;
  Matrix v;
};

Svd svd(const Matrix& m);

/// Number of singular values kept when truncating to max_rank and dropping
/// values <= zero_drop * sigma_max. Always at least 1.
std::size_t retained_rank(const RealVector& sigma, std::size_t max_rank,
                          const Tolerances& tol = {});

struct EigenDecomposition {
  RealVector values;  // ascending
  Matrix vectors;     // orthonormal columns, phase-normalized
};

/// Full eigendecomposition of a Hermitian matrix (symmetrized first).
/// Throws NumericalError when m is not Hermitian within tol.hermitian.
EigenDecomposition hermitian_eig(const Matrix& m, const Tolerances& tol = {});

/// The `count` smallest eigenpairs only.
EigenDecomposition hermitian_eig_lowest(const Matrix& m, std::size_t count,
                                        const Tolerances& tol = {});

struct EigenPair {
  double value = 0.0;
  Vector vector;
};

/// Smallest eigenpair of the pencil a v = lambda b v via Cholesky reduction,
/// normalized to v^H b v = 1. Throws SingularDenominator when a Cholesky
/// pivot falls below tol.pd_floor * trace(b) / dim(b).
EigenPair generalized_eig_min(const Matrix& a, const Matrix& b, const Tolerances& tol = {});

struct PencilResult {
  EigenPair pair;
  bool projected = false;  // true when the null-space projection was needed
};

/// generalized_eig_min, falling back to solving on the range of b when b is
/// only semidefinite: with b = W diag(mu) W^H and P = W_k diag(mu_k)^{-1/2}
/// over eigenvalues above tol.projection_floor * mu_max, the reduced
/// standard problem P^H a P y = lambda y gives v = P y.
PencilResult lowest_pencil_pair(const Matrix& a, const Matrix& b, const Tolerances& tol = {});

/// Rescales v so its first entry above 1e-10 * max|v| is real positive.
void normalize_phase(Eigen::Ref<Vector> v);

bool all_finite(const Matrix& m);

}  // namespace qtn
