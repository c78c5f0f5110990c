#pragma once

#include <optional>
#include <span>
#include <vector>

#include "qtn/hamiltonian.hpp"
#include "qtn/tensor.hpp"

namespace qtn {

/// One MPS site: a D_left x D_right matrix per physical index value.
struct SiteTensor {
  std::vector<Matrix> slices;

  SiteTensor() = default;
  explicit SiteTensor(std::vector<Matrix> s) : slices(std::move(s)) {}
  static SiteTensor zeros(std::size_t phys, std::size_t rows, std::size_t cols);

  std::size_t phys() const { return slices.size(); }
  std::size_t rows() const { return slices.empty() ? 0 : static_cast<std::size_t>(slices[0].rows()); }
  std::size_t cols() const { return slices.empty() ? 0 : static_cast<std::size_t>(slices[0].cols()); }

  /// Slices stacked vertically: (rows * phys) x cols, row = a + rows * i.
  Matrix stacked_rows() const;
  /// Slices side by side: rows x (phys * cols), column = b + cols * i.
  Matrix stacked_cols() const;
  static SiteTensor from_stacked_rows(const Matrix& m, std::size_t phys);
  static SiteTensor from_stacked_cols(const Matrix& m, std::size_t phys);
};

/// Matrix product state over a blocking of the p sites. Site k carries one
/// matrix per value of its block index (2^{t_k} values). Open chains have
/// unit outer bonds; periodic chains close with a trace.
struct MpsState {
  Boundary boundary = Boundary::open;
  Blocking blocking;
  std::vector<SiteTensor> sites;

  /// Throws DimensionError when shapes do not chain.
  void validate() const;
  /// D_0, D_1, ..., D_q (D_q == D_0 for periodic).
  std::vector<std::size_t> bond_dims() const;
  std::size_t blocks() const { return sites.size(); }
  std::size_t physical_sites() const { return blocking.sites(); }
};

/// Component for the given per-block index values.
Scalar evaluate(const MpsState& x, std::span<const std::size_t> block_index);
/// Component at a basis index of the dense vector.
Scalar evaluate_index(const MpsState& x, std::size_t index);

DenseState to_dense(const MpsState& x, const Tolerances& tol = {});

/// Complex Gaussian entries from a seeded mt19937_64, scaled so the
/// expected squared norm is about one. Open chains clamp each bond to
/// min(D, 2^{sites left of it}, 2^{sites right of it}).
MpsState random_mps(std::size_t p, std::size_t bond_dim, Boundary boundary, const Blocking& blocking,
                    std::uint64_t seed);

/// Bond-dimension-1 MPS of the basis vector e_index.
MpsState from_unit_vector(std::size_t index, std::size_t p, std::optional<Blocking> blocking = std::nullopt);

/// x + y with block-diagonal interior sites; open ends are concatenated.
MpsState add(const MpsState& x, const MpsState& y);

/// Multiplies the first site by s.
MpsState scaled(const MpsState& x, Scalar s);

enum class GaugeFlag { none, left, right };

struct GaugeStatus {
  std::vector<GaugeFlag> flags;
  std::optional<std::size_t> center;
};

struct NormalizedMps {
  MpsState state;
  GaugeStatus status;
  /// Squared Frobenius weight of the orthogonality center; equals the
  /// squared norm of the vector for open chains.
  double gamma = 0.0;
};

/// SVD sweep from the first to the last site: every site but the last
/// becomes left-gauged, sum_i U^(i)H U^(i) = I.
NormalizedMps normalize_left_sweep(const MpsState& x, const Tolerances& tol = {});

/// Mirror image: every site but the first becomes right-gauged,
/// sum_i U^(i) U^(i)H = I.
NormalizedMps normalize_right_sweep(const MpsState& x, const Tolerances& tol = {});

/// Largest gauge defect over the flagged sites.
double gauge_residual(const MpsState& x, const GaugeStatus& status);
double left_gauge_residual(const SiteTensor& s);
double right_gauge_residual(const SiteTensor& s);

enum class Direction { left, right };

struct ShiftResult {
  MpsState state;
  double discarded_weight = 0.0;  // l2 norm of the dropped singular values
  std::size_t rank = 0;
};

/// SVD of the joined block of sites j and j+1. Moving right stores U at
/// site j and diag(sigma) V at j+1; moving left stores U diag(sigma) at j
/// and V at j+1. With max_rank set only the largest singular values are kept.
ShiftResult two_site_shift(const MpsState& x, std::size_t j, Direction direction,
                           std::optional<std::size_t> max_rank = std::nullopt, const Tolerances& tol = {});

/// bra^H ket by site-by-site zipper contraction.
Scalar inner(const MpsState& bra, const MpsState& ket, FlopCounter* flops = nullptr);

/// Sum over terms of each term applied site-locally; bond dimension M * D.
MpsState apply_hamiltonian(const SpinHamiltonian& h, const MpsState& x);

/// bra^H H ket with each term's factors inserted on the physical bonds.
Scalar expectation_form(const SpinHamiltonian& h, const MpsState& bra, const MpsState& ket,
                        FlopCounter* flops = nullptr);

/// x^H H x (not divided by the norm).
double expectation(const SpinHamiltonian& h, const MpsState& x, FlopCounter* flops = nullptr);

/// Applies op to the physical index of a site: out^(i) = sum_i' op(i, i') in^(i').
SiteTensor apply_site_operator(const Matrix& op, const SiteTensor& s, FlopCounter* flops = nullptr);

}  // namespace qtn
