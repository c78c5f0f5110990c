#pragma once

#include <cstdint>
#include <vector>

#include "qtn/hamiltonian.hpp"
#include "qtn/mps.hpp"

namespace qtn {

/// Blocked canonical (CP) format: sum over addends l of
/// weight[l] * factors[l][0] (x) factors[l][1] (x) ... (x) factors[l][q-1],
/// where factors[l][i] has length 2^{t_i} and mode 0 holds the lowest bits.
struct BlockedCp {
  Blocking blocking;
  std::vector<std::vector<Vector>> factors;
  std::vector<Scalar> weights;

  std::size_t rank() const { return factors.size(); }
  std::size_t modes() const { return blocking.blocks(); }

  /// Throws DimensionError on factor lengths that do not match the blocking.
  void validate() const;
};

DenseState to_dense(const BlockedCp& x, const Tolerances& tol = {});

/// Unit-norm complex Gaussian factors from a seeded mt19937_64, weights 1.
BlockedCp random_cp(const Blocking& blocking, std::size_t rank, std::uint64_t seed);

/// Every factor scaled to unit norm with the magnitude moved into the
/// weight. Addends with a zero factor get weight 0 and e_0 factors.
BlockedCp normalized(const BlockedCp& x);

/// Folds the weights into the first mode; all weights become 1.
BlockedCp absorb_weights(const BlockedCp& x);

/// y^H x as a sum over addend pairs of products of per-mode dots.
Scalar inner(const BlockedCp& y, const BlockedCp& x, FlopCounter* flops = nullptr);

/// y^H H x with the block operators applied matrix-free. The blocking of h
/// must match both states.
Scalar expectation_form(const BlockedHamiltonian& h, const BlockedCp& y, const BlockedCp& x,
                        FlopCounter* flops = nullptr);

/// H x as a CP state of rank M * D, addend index k * D + l, with the term
/// coefficient and the addend weight folded into mode 0.
BlockedCp apply_hamiltonian(const BlockedHamiltonian& h, const BlockedCp& x);

/// Open MPS with diagonal interior sites representing the same vector.
MpsState to_mps(const BlockedCp& x);

/// Which block-local operator the spectral initial guess diagonalizes.
enum class SpectralVariant {
  /// Weighted sum of the terms supported inside the block; terms that
  /// reach into other blocks are left out.
  local_weighted,
  /// Unweighted sum of every term's block factor.
  all_factors,
};

/// Mode i of addend l is the l-th lowest eigenvector of the block-local
/// operator. Addends beyond the block dimension get random unit factors
/// drawn from `seed`.
BlockedCp spectral_init(const BlockedHamiltonian& h, std::size_t rank,
                        SpectralVariant variant = SpectralVariant::local_weighted, std::uint64_t seed = 1,
                        const Tolerances& tol = {});

/// Block-local operator used by spectral_init, as an explicit matrix.
Matrix spectral_operator(const BlockedHamiltonian& h, std::size_t mode, SpectralVariant variant);

}  // namespace qtn
