#pragma once

#include <chrono>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace qtn {

using Scalar = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Every numerical threshold used across the library, in one place.
///
/// Functions that depend on a threshold take a `const Tolerances&` defaulting
/// to `Tolerances{}`; overriding a field changes behavior for that call only.
struct Tolerances {
  /// Relative Hermiticity defect accepted before symmetrizing, measured as
  /// ||m - m^H||_F <= hermitian * max(1, ||m||_F).
  double hermitian = 1e-10;
  /// Positive-definiteness floor relative to trace(b)/dim(b).
  double pd_floor = 1e-12;
  /// Eigenvalues of a semidefinite denominator at or below
  /// projection_floor * lambda_max span the discarded null space.
  double projection_floor = 1e-10;
  /// Singular values <= zero_drop * sigma_max are treated as exact zeros.
  double zero_drop = 1e-14;
  /// Minimal |last coordinate| of a bordered eigenvector before a restart.
  double pinned_coordinate = 1e-12;
  /// Energy change below which a sweep counts as converged.
  double convergence = 1e-10;
  /// Largest site count for which dense 2^p objects are materialized.
  std::size_t dense_site_cap = 14;

  bool operator==(const Tolerances&) const = default;
};

/// Base class of all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes, sizes or blockings that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite input or a numerical breakdown.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The denominator matrix of a generalized eigenproblem is not positive
/// definite above the configured floor.
class SingularDenominator : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A dense materialization was requested beyond the configured site cap.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

/// Instrumented multiply-add counter for contraction kernels.
///
/// One unit is one complex multiply-add. Kernels accept a nullable pointer
/// and only count when it is set.
struct FlopCounter {
  std::uint64_t total = 0;
  std::uint64_t max_step = 0;
  std::size_t steps = 0;

  void add(std::uint64_t n) {
    total += n;
    if (n > max_step) max_step = n;
    ++steps;
  }
};

inline void count(FlopCounter* counter, std::uint64_t n) {
  if (counter != nullptr) counter->add(n);
}

/// One row of a solver's convergence history.
struct TraceEntry {
  std::size_t stage = 1;     // addend index for greedy solvers, 1 otherwise
  std::size_t sweep = 0;
  std::size_t position = 0;  // site or mode updated
  double energy = 0.0;
  std::uint64_t flops = 0;   // cumulative
  bool restart = false;
  double elapsed = 0.0;      // seconds since the solver started
};

/// Seconds since construction on a monotonic clock.
class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::size_t pow2(std::size_t n) { return std::size_t{1} << n; }

}  // namespace qtn
