#include "qtn/oracle.hpp"

#include <cmath>

#include "qtn/linalg.hpp"

namespace qtn {

GroundState ground_state_dense(const SpinHamiltonian& h, const Tolerances& tol) {
  const Matrix m = materialize_dense(h, tol);
  auto lowest = hermitian_eig_lowest(m, 1, tol);
  Vector v = lowest.vectors.col(0);
  v.normalize();
  normalize_phase(v);
  return {lowest.values(0), DenseState(h.sites, std::move(v))};
}

double rayleigh(const SpinHamiltonian& h, const DenseState& x, const Tolerances& tol) {
  const double norm2 = x.coefficients.squaredNorm();
  if (norm2 == 0.0) throw NumericalError("rayleigh: zero vector");
  const Scalar num = x.coefficients.dot(apply(h, x).coefficients);
  if (std::abs(num.imag()) > tol.hermitian * std::max(1.0, std::abs(num))) {
    throw NumericalError("rayleigh: numerator has a non-negligible imaginary part");
  }
  return num.real() / norm2;
}

}  // namespace qtn
