#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qtn/hamiltonian.hpp"
#include "qtn/mps.hpp"
#include "qtn/parafac.hpp"

namespace qtn {

// ---------------------------------------------------------------------------
// Generic network contraction

enum class ContractionPolicy {
  /// Always contract the two tensors holding the smallest physical label
  /// (labels >= 0) that is still shared.
  left_to_right,
  /// Contract the pair maximizing summed width minus leftover width, in
  /// log2 units; ties go to the pair that comes first in the list.
  max_reduction,
};

/// Contracts a network in which every label occurs in at most two tensors.
/// Labels that occur once stay open in the result; disconnected pieces are
/// joined by outer products at the end.
LabeledTensor contract_network(std::vector<LabeledTensor> tensors, ContractionPolicy policy,
                               FlopCounter* flops = nullptr);

// ---------------------------------------------------------------------------
// 1D tensor-product terms with per-term blockings

/// weight * factors[0] (x) ... (x) factors[q-1] where block i covers the
/// sites offset + start(i), ..., offset + end(i) - 1 taken modulo p. A
/// nonzero offset makes the last block wrap around to site 0, which is only
/// meaningful for periodic chains.
struct MixedTerm {
  Blocking blocking;
  std::size_t offset = 0;
  std::vector<Vector> factors;
  Scalar weight = 1.0;

  std::size_t sites() const { return blocking.sites(); }
  /// Physical sites of block i, lowest bit first.
  std::vector<std::size_t> block_sites(std::size_t i) const;
  void validate() const;
};

struct MixedTermSum {
  std::size_t sites = 0;
  Boundary boundary = Boundary::open;
  std::vector<MixedTerm> terms;
};

MixedTerm random_mixed_term(const Blocking& blocking, std::size_t offset, std::uint64_t seed);

/// Addends of a CP state as mixed terms with offset 0.
MixedTermSum to_mixed(const BlockedCp& x);

DenseState to_dense(const MixedTerm& x, const Tolerances& tol = {});
DenseState to_dense(const MixedTermSum& x, const Tolerances& tol = {});

/// bra^H ket for open chains: both blockings start at site 0. The leading
/// blocks always nest, so each step contracts the shorter one against the
/// prefix of the longer one and keeps the remainder.
Scalar inner_mixed_obc(const MixedTerm& bra, const MixedTerm& ket, FlopCounter* flops = nullptr);

/// bra^H ket for periodic chains where either blocking may wrap.
Scalar inner_mixed_pbc(const MixedTerm& bra, const MixedTerm& ket, FlopCounter* flops = nullptr);

/// Sum over term pairs with the kernel for the geometry of the sums.
Scalar inner_sum(const MixedTermSum& bra, const MixedTermSum& ket, FlopCounter* flops = nullptr);

/// One Hamiltonian term applied block by block; the coefficient goes into
/// the weight.
MixedTerm apply_term(const KroneckerTerm& term, const MixedTerm& x);

/// x^H H x (not divided by the norm).
double expectation_mixed(const SpinHamiltonian& h, const MixedTermSum& x, FlopCounter* flops = nullptr);

/// bra^H ket for block MPS with possibly different blockings. Each step
/// sums the physical sites shared by the current leading sites, carrying
/// the bond indices along.
Scalar inner_block_mps_mixed(const MpsState& bra, const MpsState& ket, FlopCounter* flops = nullptr);

/// The tensors of a contraction with one block of `bra` left out; the
/// result is a vector over that block's index, linear in ket and
/// antilinear in bra. Used to build the cross terms of ALS updates.
Vector open_block_contraction(const MixedTerm& bra, std::size_t open_block, const MixedTerm& ket,
                              FlopCounter* flops = nullptr);

/// Parses "5,5|2,3,5".
std::vector<Blocking> parse_schedule(const std::string& text);

struct MixedGreedyOptions {
  std::size_t rank_per_blocking = 1;
  std::size_t sweeps = 20;  // per addend
  std::uint64_t seed = 1;
  std::size_t max_restarts = 3;
  Tolerances tol;
};

struct MixedGreedyResult {
  std::vector<TraceEntry> trace;
  MixedTermSum state;
  double energy = 0.0;
  std::vector<double> stage_energies;
  std::size_t restarts = 0;
};

/// Greedy addend-by-addend minimization on an open chain where the addends
/// of schedule[n] use that blocking. Addend 1 is rank-one ALS; later
/// addends solve the bordered pencil against the frozen ones, whose cross
/// terms come from mixed contractions. With one blocking repeated this is
/// the CP greedy solver with the same random starts.
MixedGreedyResult ground_state_mixed_greedy(const SpinHamiltonian& h, const std::vector<Blocking>& schedule,
                                            const MixedGreedyOptions& options);

// ---------------------------------------------------------------------------
// 2D four-pattern terms

/// A lattice of rows x cols subblocks, each a patch_rows x patch_cols patch
/// of physical sites. Physical sites are numbered row-major over the
/// (rows * patch_rows) x (cols * patch_cols) lattice; inside a subblock the
/// patch is read row-major, lowest bit first. Both subblock extents must be
/// even.
struct SubblockLattice {
  std::size_t rows = 2;
  std::size_t cols = 2;
  std::size_t patch_rows = 1;
  std::size_t patch_cols = 1;

  std::size_t subblocks() const { return rows * cols; }
  std::size_t r() const { return patch_rows * patch_cols; }
  std::size_t sites() const { return subblocks() * r(); }
  std::size_t physical_rows() const { return rows * patch_rows; }
  std::size_t physical_cols() const { return cols * patch_cols; }
  std::vector<std::size_t> subblock_sites(std::size_t s) const;
  void validate() const;
  bool operator==(const SubblockLattice&) const = default;
};

/// Superblock pairs (first, second) of subblock indices s = row * cols + col
/// for pattern 1 (horizontal pairs), 2 (horizontal pairs shifted by one
/// column, wrapping), 3 (vertical pairs) or 4 (vertical pairs shifted by
/// one row, wrapping). The superblock factor index is j_first + 2^r j_second.
std::vector<std::pair<std::size_t, std::size_t>> pattern_pairs(const SubblockLattice& lattice, int pattern);

struct PatternedTerm2D {
  SubblockLattice lattice;
  int pattern = 1;
  std::vector<Vector> factors;  // one per superblock, length 4^r
  Scalar weight = 1.0;

  void validate() const;
};

PatternedTerm2D random_pattern_term(const SubblockLattice& lattice, int pattern, std::uint64_t seed);

DenseState to_dense(const PatternedTerm2D& x, const Tolerances& tol = {});

/// bra^H ket by walking the cycles formed by superblocks that share a
/// subblock; each step multiplies 2^r x 2^r matrices.
Scalar inner_pattern_2d(const PatternedTerm2D& bra, const PatternedTerm2D& ket, FlopCounter* flops = nullptr);

/// Coefficients c minimizing || target - sum_t c_t basis_t || using only
/// pairwise pattern contractions (normal equations solved by a
/// rank-revealing least-squares solve).
std::vector<Scalar> fit_pattern_coefficients(std::span<const PatternedTerm2D> basis,
                                             std::span<const PatternedTerm2D> target);

}  // namespace qtn
