#pragma once

#include <cstdint>
#include <vector>

#include "qtn/mps.hpp"
#include "qtn/tensor.hpp"

namespace qtn {

/// Open-boundary PEPS on a rows x cols lattice. Site (r, c) is physical
/// site r * cols + c (row-major, matching the 2D Hamiltonians) and holds a
/// tensor of shape {2, up, down, left, right}; edge-facing bonds have
/// dimension 1.
struct PepsState {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<DenseTensor> sites;

  std::size_t physical_sites() const { return rows * cols; }
  const DenseTensor& site(std::size_t r, std::size_t c) const { return sites.at(r * cols + c); }
  DenseTensor& site(std::size_t r, std::size_t c) { return sites.at(r * cols + c); }
  /// Throws DimensionError when shapes do not match across bonds or an
  /// edge bond is not 1.
  void validate() const;
};

/// Complex Gaussian entries, every interior bond of dimension D.
PepsState random_peps(std::size_t rows, std::size_t cols, std::size_t bond_dim, std::uint64_t seed);

/// 1 x p PEPS carrying an open MPS with the all-ones blocking.
PepsState peps_from_mps(const MpsState& x);

/// Contracts the whole network in row-major site order. At most 12 sites
/// (and no more than tol.dense_site_cap).
DenseState to_dense(const PepsState& x, const Tolerances& tol = {});

/// bra^H ket by the column sweep:
///  1. every site's physical index is summed, and each bra/ket bond pair is
///     grouped into one index of size D_bra * D_ket (bra index fastest);
///  2. the boundary column (initially trivial) absorbs the next column
///     row by row from the bottom, summing the horizontal leg and grouping
///     the vertical bonds pairwise;
///  3. the merged column is read as an MPS over the rows whose physical
///     legs point right. Its vertical bonds are first brought to their
///     exact ranks by a bottom-to-top SVD sweep; a top-to-bottom SVD sweep
///     then splits each row as (upper bond, right leg) | lower bond and
///     keeps at most d_cut singular values;
///  4. steps 2-3 repeat for every column; the last merged column has
///     trivial right legs and is multiplied out from the top.
/// With d_cut at least the exact boundary ranks the result equals the dense
/// inner product.
///
/// With d_cut = D, absorbing an interior site costs of order D^10 and the
/// compression SVDs of order D^11 per row, which dominate from D = 2 on.
/// Compression is skipped when every boundary bond already fits in d_cut.
/// `phases` reports each step separately.
struct PepsPhaseFlops {
  FlopCounter physical;  // step 1
  FlopCounter absorb;    // step 2 and the final column
  FlopCounter compress;  // step 3
};

Scalar inner_peps(const PepsState& bra, const PepsState& ket, std::size_t d_cut, FlopCounter* flops = nullptr,
                  PepsPhaseFlops* phases = nullptr, const Tolerances& tol = {});

}  // namespace qtn
