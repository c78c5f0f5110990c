#include "qtn/mixed.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/QR>

namespace qtn {

namespace {

Vector random_unit(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index r = 0; r < v.size(); ++r) {
    const double re = normal(rng);
    const double im = normal(rng);
    v(r) = Scalar(re, im);
  }
  return v / v.norm();
}

bool share_label(const LabeledTensor& a, const LabeledTensor& b) {
  return std::any_of(a.labels.begin(), a.labels.end(), [&](int l) { return b.has_label(l); });
}

double pair_score(const LabeledTensor& a, const LabeledTensor& b) {
  double shared = 0.0;
  double leftover = 0.0;
  for (std::size_t k = 0; k < a.order(); ++k) {
    const double w = std::log2(static_cast<double>(a.dims[k]));
    (b.has_label(a.labels[k]) ? shared : leftover) += w;
  }
  for (std::size_t k = 0; k < b.order(); ++k) {
    if (!a.has_label(b.labels[k])) leftover += std::log2(static_cast<double>(b.dims[k]));
  }
  return shared - leftover;
}

std::pair<std::size_t, std::size_t> pick_pair(const std::vector<LabeledTensor>& ts, ContractionPolicy policy) {
  const std::size_t n = ts.size();
  if (policy == ContractionPolicy::left_to_right) {
    int best_label = -1;
    std::pair<std::size_t, std::size_t> best{0, 1};
    for (std::size_t a = 0; a < n; ++a) {
      for (int l : ts[a].labels) {
        if (l < 0 || (best_label >= 0 && l >= best_label)) continue;
        for (std::size_t b = a + 1; b < n; ++b) {
          if (ts[b].has_label(l)) {
            best_label = l;
            best = {a, b};
            break;
          }
        }
      }
    }
    if (best_label >= 0) return best;
  } else {
    bool found = false;
    double best_score = 0.0;
    std::pair<std::size_t, std::size_t> best{0, 1};
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        if (!share_label(ts[a], ts[b])) continue;
        const double s = pair_score(ts[a], ts[b]);
        if (!found || s > best_score) {
          found = true;
          best_score = s;
          best = {a, b};
        }
      }
    }
    if (found) return best;
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (share_label(ts[a], ts[b])) return {a, b};
    }
  }
  return {0, 1};
}

LabeledTensor block_tensor(const MixedTerm& t, std::size_t i, bool conjugate) {
  const auto sites = t.block_sites(i);
  std::vector<int> labels(sites.begin(), sites.end());
  std::vector<Scalar> data(t.factors[i].data(), t.factors[i].data() + t.factors[i].size());
  if (conjugate) {
    for (auto& v : data) v = std::conj(v);
  }
  return LabeledTensor(std::move(labels), std::vector<std::size_t>(sites.size(), 2), std::move(data));
}

std::vector<LabeledTensor> term_tensors(const MixedTerm& t, bool conjugate, std::size_t skip) {
  std::vector<LabeledTensor> out;
  for (std::size_t i = 0; i < t.blocking.blocks(); ++i) {
    if (i != skip) out.push_back(block_tensor(t, i, conjugate));
  }
  return out;
}

Scalar scalar_of(const LabeledTensor& t) {
  if (t.size() != 1) throw DimensionError("contraction left open indices");
  return t.data[0];
}

Scalar pair_inner(const MixedTerm& bra, const MixedTerm& ket, ContractionPolicy policy, FlopCounter* flops) {
  auto tensors = term_tensors(bra, true, bra.blocking.blocks());
  auto kt = term_tensors(ket, false, ket.blocking.blocks());
  tensors.insert(tensors.end(), kt.begin(), kt.end());
  return std::conj(bra.weight) * ket.weight * scalar_of(contract_network(std::move(tensors), policy, flops));
}

void check_pair(const MixedTerm& bra, const MixedTerm& ket) {
  bra.validate();
  ket.validate();
  if (bra.sites() != ket.sites()) throw DimensionError("mixed inner product: site counts differ");
}

// Tensor of one MPS site with labels (block sites..., left bond, right bond);
// open outer bonds of size one are dropped.
LabeledTensor mps_site_tensor(const MpsState& x, std::size_t k, int bond_base, bool conjugate) {
  const std::size_t q = x.blocks();
  const auto& s = x.sites[k];
  const std::size_t phys = s.phys();
  const std::size_t dl = s.rows();
  const std::size_t dr = s.cols();
  std::vector<int> labels;
  std::vector<std::size_t> dims;
  for (std::size_t site = x.blocking.start(k); site < x.blocking.end(k); ++site) {
    labels.push_back(static_cast<int>(site));
    dims.push_back(2);
  }
  const bool periodic = x.boundary == Boundary::periodic;
  if (periodic && q == 1) {
    // Closing bond on a single site: take the trace right away.
    std::vector<Scalar> data(phys);
    for (std::size_t j = 0; j < phys; ++j) {
      data[j] = conjugate ? std::conj(s.slices[j].trace()) : s.slices[j].trace();
    }
    return LabeledTensor(std::move(labels), std::move(dims), std::move(data));
  }
  if (periodic || k > 0) {
    labels.push_back(bond_base - static_cast<int>(k));
    dims.push_back(dl);
  }
  if (periodic || k + 1 < q) {
    labels.push_back(bond_base - static_cast<int>((k + 1) % q));
    dims.push_back(dr);
  }
  std::vector<Scalar> data(phys * dl * dr);
  for (std::size_t b = 0; b < dr; ++b) {
    for (std::size_t a = 0; a < dl; ++a) {
      for (std::size_t j = 0; j < phys; ++j) {
        const Scalar v = s.slices[j](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        data[j + phys * (a + dl * b)] = conjugate ? std::conj(v) : v;
      }
    }
  }
  return LabeledTensor(std::move(labels), std::move(dims), std::move(data));
}

// Subblock value of a dense basis index.
std::size_t subblock_value(const SubblockLattice& lat, std::size_t s, std::size_t index) {
  std::size_t j = 0;
  const auto sites = lat.subblock_sites(s);
  for (std::size_t pos = 0; pos < sites.size(); ++pos) j |= ((index >> sites[pos]) & 1U) << pos;
  return j;
}

}  // namespace

LabeledTensor contract_network(std::vector<LabeledTensor> tensors, ContractionPolicy policy, FlopCounter* flops) {
  if (tensors.empty()) return LabeledTensor::scalar(1.0);
  while (tensors.size() > 1) {
    const auto [a, b] = pick_pair(tensors, policy);
    tensors[a] = contract(tensors[a], tensors[b], flops);
    tensors.erase(tensors.begin() + static_cast<std::ptrdiff_t>(b));
  }
  return std::move(tensors[0]);
}

std::vector<std::size_t> MixedTerm::block_sites(std::size_t i) const {
  const std::size_t p = sites();
  std::vector<std::size_t> out;
  for (std::size_t pos = blocking.start(i); pos < blocking.end(i); ++pos) out.push_back((offset + pos) % p);
  return out;
}

void MixedTerm::validate() const {
  const std::size_t p = sites();
  if (p == 0) throw DimensionError("MixedTerm: empty blocking");
  if (offset >= p) throw DimensionError("MixedTerm: offset must be below the site count");
  if (factors.size() != blocking.blocks()) throw DimensionError("MixedTerm: one factor per block required");
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (static_cast<std::size_t>(factors[i].size()) != blocking.dim(i)) {
      throw DimensionError("MixedTerm: factor " + std::to_string(i) + " does not match its block");
    }
  }
}

MixedTerm random_mixed_term(const Blocking& blocking, std::size_t offset, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MixedTerm t{blocking, offset, {}, 1.0};
  for (std::size_t i = 0; i < blocking.blocks(); ++i) t.factors.push_back(random_unit(blocking.dim(i), rng));
  t.validate();
  return t;
}

MixedTermSum to_mixed(const BlockedCp& x) {
  x.validate();
  MixedTermSum out{x.blocking.sites(), Boundary::open, {}};
  for (std::size_t l = 0; l < x.rank(); ++l) out.terms.push_back({x.blocking, 0, x.factors[l], x.weights[l]});
  return out;
}

DenseState to_dense(const MixedTerm& x, const Tolerances& tol) {
  x.validate();
  const std::size_t p = x.sites();
  if (p > tol.dense_site_cap) throw CapExceeded("to_dense: " + std::to_string(p) + " sites above the dense cap");
  std::vector<std::vector<std::size_t>> blocks;
  for (std::size_t i = 0; i < x.blocking.blocks(); ++i) blocks.push_back(x.block_sites(i));
  Vector out(static_cast<Eigen::Index>(pow2(p)));
  for (std::size_t idx = 0; idx < pow2(p); ++idx) {
    Scalar v = x.weight;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      std::size_t j = 0;
      for (std::size_t pos = 0; pos < blocks[i].size(); ++pos) j |= ((idx >> blocks[i][pos]) & 1U) << pos;
      v *= x.factors[i](static_cast<Eigen::Index>(j));
    }
    out(static_cast<Eigen::Index>(idx)) = v;
  }
  return DenseState(p, std::move(out));
}

DenseState to_dense(const MixedTermSum& x, const Tolerances& tol) {
  if (x.sites > tol.dense_site_cap) throw CapExceeded("to_dense: sites above the dense cap");
  Vector out = Vector::Zero(static_cast<Eigen::Index>(pow2(x.sites)));
  for (const auto& t : x.terms) {
    if (t.sites() != x.sites) throw DimensionError("MixedTermSum: term site count differs");
    out += to_dense(t, tol).coefficients;
  }
  return DenseState(x.sites, std::move(out));
}

Scalar inner_mixed_obc(const MixedTerm& bra, const MixedTerm& ket, FlopCounter* flops) {
  check_pair(bra, ket);
  if (bra.offset != 0 || ket.offset != 0) {
    throw DimensionError("inner_mixed_obc: open-chain blockings must start at site 0");
  }
  return pair_inner(bra, ket, ContractionPolicy::left_to_right, flops);
}

Scalar inner_mixed_pbc(const MixedTerm& bra, const MixedTerm& ket, FlopCounter* flops) {
  check_pair(bra, ket);
  return pair_inner(bra, ket, ContractionPolicy::max_reduction, flops);
}

Scalar inner_sum(const MixedTermSum& bra, const MixedTermSum& ket, FlopCounter* flops) {
  if (bra.sites != ket.sites || bra.boundary != ket.boundary) {
    throw DimensionError("inner_sum: geometry mismatch");
  }
  Scalar total = 0.0;
  for (const auto& b : bra.terms) {
    for (const auto& k : ket.terms) {
      total += bra.boundary == Boundary::open ? inner_mixed_obc(b, k, flops) : inner_mixed_pbc(b, k, flops);
    }
  }
  return total;
}

MixedTerm apply_term(const KroneckerTerm& term, const MixedTerm& x) {
  x.validate();
  if (term.factors.size() != x.sites()) throw DimensionError("apply_term: site count mismatch");
  MixedTerm out = x;
  out.weight *= term.coefficient;
  for (std::size_t i = 0; i < x.blocking.blocks(); ++i) {
    std::vector<SiteOperator> ops;
    for (std::size_t site : x.block_sites(i)) ops.push_back(term.factors[site]);
    const BlockOperator op(std::move(ops));
    if (!op.is_identity()) out.factors[i] = op.apply(x.factors[i]);
  }
  return out;
}

double expectation_mixed(const SpinHamiltonian& h, const MixedTermSum& x, FlopCounter* flops) {
  if (h.sites != x.sites) throw DimensionError("expectation_mixed: site count mismatch");
  Scalar total = 0.0;
  for (const auto& term : h.terms) {
    MixedTermSum hx{x.sites, x.boundary, {}};
    for (const auto& t : x.terms) hx.terms.push_back(apply_term(term, t));
    total += inner_sum(x, hx, flops);
  }
  return total.real();
}

Scalar inner_block_mps_mixed(const MpsState& bra, const MpsState& ket, FlopCounter* flops) {
  bra.validate();
  ket.validate();
  if (bra.physical_sites() != ket.physical_sites() || bra.boundary != ket.boundary) {
    throw DimensionError("inner_block_mps_mixed: geometry mismatch");
  }
  std::vector<LabeledTensor> tensors;
  for (std::size_t k = 0; k < bra.blocks(); ++k) tensors.push_back(mps_site_tensor(bra, k, -1001, true));
  for (std::size_t k = 0; k < ket.blocks(); ++k) tensors.push_back(mps_site_tensor(ket, k, -1, false));
  return scalar_of(contract_network(std::move(tensors), ContractionPolicy::left_to_right, flops));
}

Vector open_block_contraction(const MixedTerm& bra, std::size_t open_block, const MixedTerm& ket, FlopCounter* flops) {
  check_pair(bra, ket);
  if (open_block >= bra.blocking.blocks()) throw DimensionError("open_block_contraction: no such block");
  auto tensors = term_tensors(bra, true, open_block);
  auto kt = term_tensors(ket, false, ket.blocking.blocks());
  tensors.insert(tensors.end(), kt.begin(), kt.end());
  const auto policy = bra.offset == 0 && ket.offset == 0 ? ContractionPolicy::left_to_right
                                                         : ContractionPolicy::max_reduction;
  const auto result = contract_network(std::move(tensors), policy, flops);
  const auto sites = bra.block_sites(open_block);
  const std::vector<int> order(sites.begin(), sites.end());
  const auto ordered = permuted(result, order);
  Vector out = Eigen::Map<const Vector>(ordered.data.data(), static_cast<Eigen::Index>(ordered.size()));
  return std::conj(bra.weight) * ket.weight * out;
}

std::vector<Blocking> parse_schedule(const std::string& text) {
  std::vector<Blocking> out;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, '|')) out.push_back(Blocking::parse(part));
  if (out.empty()) throw Error("empty blocking schedule");
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> SubblockLattice::subblock_sites(std::size_t s) const {
  const std::size_t br = s / cols;
  const std::size_t bc = s % cols;
  std::vector<std::size_t> out;
  for (std::size_t pr = 0; pr < patch_rows; ++pr) {
    for (std::size_t pc = 0; pc < patch_cols; ++pc) {
      out.push_back((br * patch_rows + pr) * physical_cols() + bc * patch_cols + pc);
    }
  }
  return out;
}

void SubblockLattice::validate() const {
  if (rows < 2 || cols < 2 || rows % 2 != 0 || cols % 2 != 0) {
    throw DimensionError("SubblockLattice: subblock extents must be even and at least 2");
  }
  if (patch_rows == 0 || patch_cols == 0) throw DimensionError("SubblockLattice: empty patch");
}

std::vector<std::pair<std::size_t, std::size_t>> pattern_pairs(const SubblockLattice& lat, int pattern) {
  lat.validate();
  const std::size_t R = lat.rows;
  const std::size_t C = lat.cols;
  const auto at = [C](std::size_t r, std::size_t c) { return r * C + c; };
  std::vector<std::pair<std::size_t, std::size_t>> out;
  switch (pattern) {
    case 1:
      for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t c = 0; c < C; c += 2) out.emplace_back(at(r, c), at(r, c + 1));
      }
      break;
    case 2:
      for (std::size_t r = 0; r < R; ++r) {
        out.emplace_back(at(r, C - 1), at(r, 0));
        for (std::size_t c = 1; c + 1 < C; c += 2) out.emplace_back(at(r, c), at(r, c + 1));
      }
      break;
    case 3:
      for (std::size_t r = 0; r < R; r += 2) {
        for (std::size_t c = 0; c < C; ++c) out.emplace_back(at(r, c), at(r + 1, c));
      }
      break;
    case 4:
      for (std::size_t c = 0; c < C; ++c) out.emplace_back(at(R - 1, c), at(0, c));
      for (std::size_t r = 1; r + 1 < R; r += 2) {
        for (std::size_t c = 0; c < C; ++c) out.emplace_back(at(r, c), at(r + 1, c));
      }
      break;
    default:
      throw DimensionError("pattern must be 1, 2, 3 or 4");
  }
  return out;
}

void PatternedTerm2D::validate() const {
  const auto pairs = pattern_pairs(lattice, pattern);
  if (factors.size() != pairs.size()) throw DimensionError("PatternedTerm2D: one factor per superblock required");
  const std::size_t len = pow2(2 * lattice.r());
  for (const auto& f : factors) {
    if (static_cast<std::size_t>(f.size()) != len) throw DimensionError("PatternedTerm2D: factor length must be 4^r");
  }
}

PatternedTerm2D random_pattern_term(const SubblockLattice& lattice, int pattern, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PatternedTerm2D t{lattice, pattern, {}, 1.0};
  const std::size_t count = pattern_pairs(lattice, pattern).size();
  for (std::size_t s = 0; s < count; ++s) t.factors.push_back(random_unit(pow2(2 * lattice.r()), rng));
  return t;
}

DenseState to_dense(const PatternedTerm2D& x, const Tolerances& tol) {
  x.validate();
  const std::size_t p = x.lattice.sites();
  if (p > tol.dense_site_cap) throw CapExceeded("to_dense: " + std::to_string(p) + " sites above the dense cap");
  const auto pairs = pattern_pairs(x.lattice, x.pattern);
  const std::size_t r = x.lattice.r();
  Vector out(static_cast<Eigen::Index>(pow2(p)));
  std::vector<std::size_t> j(x.lattice.subblocks());
  for (std::size_t idx = 0; idx < pow2(p); ++idx) {
    for (std::size_t s = 0; s < j.size(); ++s) j[s] = subblock_value(x.lattice, s, idx);
    Scalar v = x.weight;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      v *= x.factors[k](static_cast<Eigen::Index>(j[pairs[k].first] + (j[pairs[k].second] << r)));
    }
    out(static_cast<Eigen::Index>(idx)) = v;
  }
  return DenseState(p, std::move(out));
}

Scalar inner_pattern_2d(const PatternedTerm2D& bra, const PatternedTerm2D& ket, FlopCounter* flops) {
  bra.validate();
  ket.validate();
  if (!(bra.lattice == ket.lattice)) throw DimensionError("inner_pattern_2d: lattices differ");
  const auto n = static_cast<Eigen::Index>(pow2(bra.lattice.r()));
  const std::size_t subblocks = bra.lattice.subblocks();
  const std::array<std::vector<std::pair<std::size_t, std::size_t>>, 2> pairs{pattern_pairs(bra.lattice, bra.pattern),
                                                                             pattern_pairs(ket.lattice, ket.pattern)};
  const std::array<const PatternedTerm2D*, 2> terms{&bra, &ket};
  // owner[side][subblock] = superblock holding it.
  std::array<std::vector<std::size_t>, 2> owner;
  for (int side = 0; side < 2; ++side) {
    owner[side].assign(subblocks, subblocks);
    for (std::size_t k = 0; k < pairs[side].size(); ++k) {
      owner[side][pairs[side][k].first] = k;
      owner[side][pairs[side][k].second] = k;
    }
  }
  // Superblock matrix oriented with rows indexed by subblock `from`.
  const auto oriented = [&](int side, std::size_t k, std::size_t from) {
    const Eigen::Map<const Matrix> m(terms[side]->factors[k].data(), n, n);
    Matrix out = pairs[side][k].first == from ? Matrix(m) : Matrix(m.transpose());
    if (side == 0) out = out.conjugate();
    return out;
  };

  std::vector<bool> done(pairs[1].size(), false);
  Scalar total = std::conj(bra.weight) * ket.weight;
  for (std::size_t t = 0; t < pairs[1].size(); ++t) {
    if (done[t]) continue;
    done[t] = true;
    const std::size_t start = pairs[1][t].first;
    std::size_t end = pairs[1][t].second;
    const std::size_t b0 = owner[0][end];
    if (b0 == subblocks) throw DimensionError("inner_pattern_2d: patterns do not share a subblock");
    const auto& bp = pairs[0][b0];
    if ((bp.first == start && bp.second == end) || (bp.first == end && bp.second == start)) {
      // Both superblocks cover the same two subblocks: a plain dot.
      const Matrix k = oriented(1, t, start);
      total *= oriented(0, b0, start).cwiseProduct(k).sum();
      count(flops, static_cast<std::uint64_t>(n * n));
      continue;
    }
    Matrix m = oriented(1, t, start);
    int side = 0;
    while (true) {
      const std::size_t k = owner[side][end];
      if (k == subblocks) throw DimensionError("inner_pattern_2d: patterns do not share a subblock");
      const std::size_t next = pairs[side][k].first == end ? pairs[side][k].second : pairs[side][k].first;
      m = m * oriented(side, k, end);
      count(flops, static_cast<std::uint64_t>(n * n * n));
      if (side == 1) done[k] = true;
      end = next;
      side = 1 - side;
      if (end == start) break;
    }
    total *= m.trace();
  }
  return total;
}

std::vector<Scalar> fit_pattern_coefficients(std::span<const PatternedTerm2D> basis,
                                             std::span<const PatternedTerm2D> target) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  Matrix g(n, n);
  Vector b = Vector::Zero(n);
  for (Eigen::Index s = 0; s < n; ++s) {
    for (Eigen::Index t = 0; t < n; ++t) {
      g(s, t) = inner_pattern_2d(basis[static_cast<std::size_t>(s)], basis[static_cast<std::size_t>(t)]);
    }
    for (const auto& z : target) b(s) += inner_pattern_2d(basis[static_cast<std::size_t>(s)], z);
  }
  const Vector c = g.completeOrthogonalDecomposition().solve(b);
  return std::vector<Scalar>(c.data(), c.data() + c.size());
}

}  // namespace qtn
