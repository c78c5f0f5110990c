#include "qtn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace qtn {

namespace {

// Below this size Eigen's solver is as fast as LAPACK and avoids the copy.
constexpr Eigen::Index kLapackThreshold = 64;

Matrix hermitian_part(const Matrix& m, const Tolerances& tol) {
  if (m.rows() != m.cols()) throw DimensionError("hermitian eigensolver: matrix is not square");
  if (!all_finite(m)) throw NumericalError("hermitian eigensolver: non-finite entries");
  const double defect = (m - m.adjoint()).norm();
  if (defect > tol.hermitian * std::max(1.0, m.norm())) {
    throw NumericalError("hermitian eigensolver: matrix is not Hermitian (defect " +
                         std::to_string(defect) + ")");
  }
  return 0.5 * (m + m.adjoint());
}

// Eigenpairs il..iu (1-based, ascending) via the MRRR driver. The complex
// driver is used even for real input: the real one returned wrong vectors
// with some optimized BLAS kernels, so results are also residual-checked.
EigenDecomposition lapack_range(const Matrix& h, lapack_int il, lapack_int iu) {
  const lapack_int n = static_cast<lapack_int>(h.rows());
  const lapack_int count = iu - il + 1;
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  lapack_int found = 0;
  RealVector w(n);
  Matrix a = h;
  Matrix z(n, count);
  const lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, a.data(), n, 0.0, 0.0, il, iu, 0.0,
                                         &found, w.data(), z.data(), n, support.data());
  if (info != 0 || found != count) {
    throw NumericalError("hermitian eigensolver: LAPACK failure, info=" + std::to_string(info));
  }
  EigenDecomposition out{w.head(count), std::move(z)};
  const double scale = std::max(1.0, h.cwiseAbs().rowwise().sum().maxCoeff());
  for (lapack_int k = 0; k < count; ++k) {
    const double residual = (h * out.vectors.col(k) - out.values(k) * out.vectors.col(k)).norm();
    if (!(residual <= 1e-8 * scale)) {
      throw NumericalError("hermitian eigensolver: LAPACK returned an inaccurate eigenpair (residual " +
                           std::to_string(residual) + ")");
    }
  }
  return out;
}

EigenDecomposition eigen_full(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  if (solver.info() != Eigen::Success) throw NumericalError("hermitian eigensolver: no convergence");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

void normalize_columns(Matrix& v) {
  for (Eigen::Index k = 0; k < v.cols(); ++k) normalize_phase(v.col(k));
}

}  // namespace

bool all_finite(const Matrix& m) { return m.allFinite(); }

void normalize_phase(Eigen::Ref<Vector> v) {
  if (v.size() == 0) return;
  const double largest = v.cwiseAbs().maxCoeff();
  if (largest == 0.0) return;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v(i));
    if (mag > 1e-10 * largest) {
      v *= std::conj(v(i)) / mag;
      v(i) = mag;
      return;
    }
  }
}

Svd svd(const Matrix& m) {
  if (!all_finite(m)) throw NumericalError("svd: non-finite entries");
  if (m.size() == 0) throw DimensionError("svd: empty matrix");
  Eigen::BDCSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Svd out{solver.matrixU(), solver.singularValues(), solver.matrixV().adjoint()};
  for (Eigen::Index k = 0; k < out.u.cols(); ++k) {
    auto col = out.u.col(k);
    const double largest = col.cwiseAbs().maxCoeff();
    if (largest == 0.0) continue;
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      const double mag = std::abs(col(i));
      if (mag > 1e-10 * largest) {
        const Scalar phase = std::conj(col(i)) / mag;
        col *= phase;
        col(i) = mag;
        out.v.row(k) *= std::conj(phase);
        break;
      }
    }
  }
  return out;
}

std::size_t retained_rank(const RealVector& sigma, std::size_t max_rank, const Tolerances& tol) {
  if (sigma.size() == 0) return 0;
  const double cutoff = tol.zero_drop * sigma(0);
  std::size_t rank = 0;
  while (rank < static_cast<std::size_t>(sigma.size()) && rank < max_rank &&
         sigma(static_cast<Eigen::Index>(rank)) > cutoff) {
    ++rank;
  }
  return std::max<std::size_t>(rank, 1);
}

EigenDecomposition hermitian_eig(const Matrix& m, const Tolerances& tol) {
  const Matrix h = hermitian_part(m, tol);
  auto out = h.rows() < kLapackThreshold
                 ? eigen_full(h)
                 : lapack_range(h, 1, static_cast<lapack_int>(h.rows()));
  normalize_columns(out.vectors);
  return out;
}

EigenDecomposition hermitian_eig_lowest(const Matrix& m, std::size_t count, const Tolerances& tol) {
  const Matrix h = hermitian_part(m, tol);
  if (count == 0 || count > static_cast<std::size_t>(h.rows())) {
    throw DimensionError("hermitian_eig_lowest: count out of range");
  }
  EigenDecomposition out;
  if (h.rows() < kLapackThreshold) {
    auto full = eigen_full(h);
    const auto c = static_cast<Eigen::Index>(count);
    out = {full.values.head(c), full.vectors.leftCols(c)};
  } else {
    out = lapack_range(h, 1, static_cast<lapack_int>(count));
  }
  normalize_columns(out.vectors);
  return out;
}

EigenPair generalized_eig_min(const Matrix& a, const Matrix& b, const Tolerances& tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("generalized_eig_min: a and b differ in size");
  }
  const Matrix ha = hermitian_part(a, tol);
  const Matrix hb = hermitian_part(b, tol);
  const Eigen::Index n = hb.rows();
  const double floor = tol.pd_floor * std::abs(hb.trace().real()) / static_cast<double>(n);

  Eigen::LLT<Matrix> llt(hb);
  if (llt.info() != Eigen::Success) throw SingularDenominator("generalized_eig_min: b is not positive definite");
  const Matrix l = llt.matrixL();
  const double min_pivot = l.diagonal().real().cwiseAbs2().minCoeff();
  if (!(min_pivot > floor)) {
    throw SingularDenominator("generalized_eig_min: Cholesky pivot below positive-definiteness floor");
  }

  // c = L^{-1} a L^{-H}
  Matrix c = llt.matrixL().solve(ha);
  c = llt.matrixL().solve(c.adjoint().eval()).adjoint();
  auto lowest = hermitian_eig_lowest(0.5 * (c + c.adjoint()), 1, tol);
  Vector v = llt.matrixU().solve(lowest.vectors.col(0));
  normalize_phase(v);
  return {lowest.values(0), std::move(v)};
}

PencilResult lowest_pencil_pair(const Matrix& a, const Matrix& b, const Tolerances& tol) {
  try {
    return {generalized_eig_min(a, b, tol), false};
  } catch (const SingularDenominator&) {
  }
  const Matrix ha = hermitian_part(a, tol);
  const auto gram = hermitian_eig(b, tol);
  const double mu_max = gram.values.maxCoeff();
  if (!(mu_max > 0.0)) throw SingularDenominator("lowest_pencil_pair: denominator is zero");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < gram.values.size(); ++k) {
    if (gram.values(k) > tol.projection_floor * mu_max) keep.push_back(k);
  }
  Matrix p(b.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    p.col(static_cast<Eigen::Index>(k)) = gram.vectors.col(keep[k]) / std::sqrt(gram.values(keep[k]));
  }
  const Matrix reduced = p.adjoint() * ha * p;
  auto lowest = hermitian_eig_lowest(0.5 * (reduced + reduced.adjoint()), 1, tol);
  Vector v = p * lowest.vectors.col(0);
  normalize_phase(v);
  return {{lowest.values(0), std::move(v)}, true};
}

}  // namespace qtn
