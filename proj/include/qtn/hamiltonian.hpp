#pragma once

#include <string>
#include <vector>

#include "qtn/common.hpp"
#include "qtn/tensor.hpp"

namespace qtn {

enum class OperatorKind { Identity, PauliX, PauliY, PauliZ, Custom };

/// Single-site 2x2 operator. Named kinds expand to the Pauli matrices and
/// the identity; Custom carries an explicit matrix.
struct SiteOperator {
  OperatorKind kind = OperatorKind::Identity;
  Eigen::Matrix2cd custom = Eigen::Matrix2cd::Identity();

  static SiteOperator identity() { return {OperatorKind::Identity, Eigen::Matrix2cd::Identity()}; }
  static SiteOperator x() { return {OperatorKind::PauliX, {}}; }
  static SiteOperator y() { return {OperatorKind::PauliY, {}}; }
  static SiteOperator z() { return {OperatorKind::PauliZ, {}}; }
  static SiteOperator from_matrix(const Eigen::Matrix2cd& m) { return {OperatorKind::Custom, m}; }

  Eigen::Matrix2cd matrix() const;
  bool is_identity() const { return kind == OperatorKind::Identity; }
};

/// coefficient * (factors[0] (x) factors[1] (x) ... ), one factor per site.
struct KroneckerTerm {
  double coefficient = 1.0;
  std::vector<SiteOperator> factors;
};

struct SpinHamiltonian {
  std::size_t sites = 0;
  std::vector<KroneckerTerm> terms;

  SpinHamiltonian() = default;
  SpinHamiltonian(std::size_t p, std::vector<KroneckerTerm> terms);

  std::size_t term_count() const { return terms.size(); }
  /// Adds coefficient * ops placed at the given sites, identities elsewhere.
  void add_term(double coefficient, const std::vector<std::pair<std::size_t, SiteOperator>>& ops);
};

enum class Boundary { open, periodic };

Boundary parse_boundary(const std::string& name);
std::string to_string(Boundary b);

/// Ordered partition of p sites into contiguous blocks of the given widths.
struct Blocking {
  std::vector<std::size_t> widths;

  Blocking() = default;
  explicit Blocking(std::vector<std::size_t> w);

  static Blocking ones(std::size_t p);
  static Blocking single(std::size_t p) { return Blocking({p}); }
  /// Parses "5,5" style lists.
  static Blocking parse(const std::string& text);

  std::size_t blocks() const { return widths.size(); }
  std::size_t sites() const;
  std::size_t start(std::size_t block) const;
  std::size_t end(std::size_t block) const { return start(block) + widths.at(block); }
  std::size_t dim(std::size_t block) const { return pow2(widths.at(block)); }
  std::string str() const;

  bool operator==(const Blocking& other) const { return widths == other.widths; }
};

/// The Kronecker factor of one term restricted to one block of sites,
/// applied matrix-free on a length-2^t vector (first site = lowest bit).
class BlockOperator {
 public:
  BlockOperator() = default;
  explicit BlockOperator(std::vector<SiteOperator> factors);

  std::size_t width() const { return factors_.size(); }
  std::size_t dim() const { return pow2(factors_.size()); }
  bool is_identity() const { return identity_; }
  const std::vector<SiteOperator>& factors() const { return factors_; }

  /// y = op * x without forming the matrix.
  Vector apply(const Vector& x, FlopCounter* flops = nullptr) const;
  /// Explicit 2^t x 2^t matrix.
  Matrix matrix() const;

 private:
  std::vector<SiteOperator> factors_;
  bool identity_ = true;
};

/// A Hamiltonian viewed through a blocking: blocks[k][i] is term k's factor
/// on block i.
struct BlockedHamiltonian {
  Blocking blocking;
  std::vector<double> coefficients;
  std::vector<std::vector<BlockOperator>> blocks;

  std::size_t term_count() const { return coefficients.size(); }
};

BlockedHamiltonian regroup(const SpinHamiltonian& h, const Blocking& b);

/// Transverse-field Ising chain: ZZ on every nearest-neighbour bond (plus the
/// wrap bond when periodic), then lambda * X on every site.
SpinHamiltonian build_ising(std::size_t p, double lambda, Boundary boundary);

/// Jx XX + Jy YY on every bond, then lambda * X on every site.
SpinHamiltonian build_heisenberg_xy(std::size_t p, double jx, double jy, double lambda, Boundary boundary);

/// Ising model on a rows x cols lattice with row-major site numbering
/// (site = r * cols + c). Horizontal bonds first, then vertical, then the
/// transverse terms. Periodic wrap bonds are only added along extents >= 3,
/// where they connect sites that are not already neighbours.
SpinHamiltonian build_ising_2d(std::size_t rows, std::size_t cols, double lambda, Boundary boundary);

/// Explicit 2^p x 2^p matrix, built without going through apply.
Matrix materialize_dense(const SpinHamiltonian& h, const Tolerances& tol = {});

/// Matrix-free H x; terms are accumulated in term order.
DenseState apply(const SpinHamiltonian& h, const DenseState& x);

}  // namespace qtn
