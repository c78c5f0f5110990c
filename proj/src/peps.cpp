#include "qtn/peps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "qtn/linalg.hpp"

namespace qtn {

namespace {

enum Leg : std::size_t { phys = 0, up = 1, down = 2, left = 3, right = 4 };

// Labels used by the column sweep.
int vert(std::size_t r) { return 1000 + static_cast<int>(r); }     // bond above row r in the new column
int horiz(std::size_t r) { return 2000 + static_cast<int>(r); }    // boundary leg pointing right
int outgoing(std::size_t r) { return 3000 + static_cast<int>(r); } // right leg of the new column
int bound(std::size_t r) { return 4000 + static_cast<int>(r); }    // boundary bond above row r
constexpr int scratch = 9999;

LabeledTensor labeled(const DenseTensor& t, std::vector<int> labels) {
  return LabeledTensor(std::move(labels), t.shape(), std::vector<Scalar>(t.data().begin(), t.data().end()));
}

LabeledTensor relabeled(LabeledTensor t, int from, int to) {
  for (auto& l : t.labels) {
    if (l == from) l = to;
  }
  return t;
}

// Rows are the given labels (first fastest), columns the rest.
Matrix as_matrix(const LabeledTensor& t, std::span<const int> row_labels, std::span<const int> col_labels) {
  std::vector<int> order(row_labels.begin(), row_labels.end());
  order.insert(order.end(), col_labels.begin(), col_labels.end());
  const auto p = permuted(t, order);
  std::size_t rows = 1;
  for (int l : row_labels) rows *= p.dim_of(l);
  const auto cols = p.size() / rows;
  return Eigen::Map<const Matrix>(p.data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

LabeledTensor from_matrix(const Matrix& m, std::vector<int> labels, std::vector<std::size_t> dims) {
  return LabeledTensor(std::move(labels), std::move(dims), std::vector<Scalar>(m.data(), m.data() + m.size()));
}

void count_svd(FlopCounter* flops, const Matrix& m) {
  const auto r = static_cast<std::uint64_t>(m.rows());
  const auto c = static_cast<std::uint64_t>(m.cols());
  count(flops, r * c * std::min(r, c));
}

// Sum over the physical index with bra/ket bond pairs grouped, bra fastest.
// Labels {up, down, left, right} = {vert(r), vert(r+1), horiz(r), outgoing(r)}.
LabeledTensor transfer_tensor(const DenseTensor& b, const DenseTensor& a, std::size_t r, FlopCounter* flops) {
  LabeledTensor bc = labeled(b, {0, 1, 2, 3, 4});
  for (auto& v : bc.data) v = std::conj(v);
  const auto prod = contract(bc, labeled(a, {0, 5, 6, 7, 8}), flops);
  const std::vector<int> order{1, 5, 2, 6, 3, 7, 4, 8};
  auto t = permuted(prod, order);
  const std::vector<int> g_up{1, 5}, g_down{2, 6}, g_left{3, 7}, g_right{4, 8};
  t = fuse(t, g_up, vert(r));
  t = fuse(t, g_down, vert(r + 1));
  t = fuse(t, g_left, horiz(r));
  return fuse(t, g_right, outgoing(r));
}

// Boundary rows carry labels {bound(r), bound(r+1), horiz(r)}.
void absorb(std::vector<LabeledTensor>& boundary, const PepsState& bra, const PepsState& ket, std::size_t c,
            PepsPhaseFlops& flops) {
  for (std::size_t k = bra.rows; k-- > 0;) {
    const auto e = transfer_tensor(bra.site(k, c), ket.site(k, c), k, &flops.physical);
    auto m = contract(boundary[k], e, &flops.absorb);
    const std::vector<int> order{bound(k), vert(k), bound(k + 1), vert(k + 1), outgoing(k)};
    m = permuted(m, order);
    const std::vector<int> top{bound(k), vert(k)}, bottom{bound(k + 1), vert(k + 1)};
    m = fuse(m, top, bound(k));
    m = fuse(m, bottom, bound(k + 1));
    boundary[k] = relabeled(std::move(m), outgoing(k), horiz(k));
  }
}

// Bottom-to-top SVD sweep: every row but the first gets orthonormal rows
// as a bound(r) x (bound(r+1), horiz(r)) matrix and exact bond ranks.
void orthonormalize_from_bottom(std::vector<LabeledTensor>& boundary, FlopCounter* flops, const Tolerances& tol) {
  for (std::size_t r = boundary.size() - 1; r > 0; --r) {
    const std::vector<int> rows{bound(r)}, cols{bound(r + 1), horiz(r)};
    const Matrix m = as_matrix(boundary[r], rows, cols);
    const auto dec = svd(m);
    count_svd(flops, m);
    const auto k = retained_rank(dec.sigma, std::numeric_limits<std::size_t>::max(), tol);
    const auto ki = static_cast<Eigen::Index>(k);
    boundary[r] = from_matrix(dec.v.topRows(ki), {bound(r), bound(r + 1), horiz(r)},
                              {k, boundary[r].dim_of(bound(r + 1)), boundary[r].dim_of(horiz(r))});
    const Matrix w = dec.u.leftCols(ki) * dec.sigma.head(ki).asDiagonal();
    auto next = contract(boundary[r - 1],
                         from_matrix(w, {bound(r), scratch}, {static_cast<std::size_t>(m.rows()), k}), flops);
    next = relabeled(std::move(next), scratch, bound(r));
    const std::vector<int> order{bound(r - 1), bound(r), horiz(r - 1)};
    boundary[r - 1] = permuted(next, order);
  }
}

// Top-to-bottom SVD sweep splitting (bound(r), horiz(r)) | bound(r+1) and
// keeping at most d_cut singular values per bond.
void truncate_from_top(std::vector<LabeledTensor>& boundary, std::size_t d_cut, FlopCounter* flops,
                       const Tolerances& tol) {
  for (std::size_t r = 0; r + 1 < boundary.size(); ++r) {
    const std::vector<int> rows{bound(r), horiz(r)}, cols{bound(r + 1)};
    const Matrix m = as_matrix(boundary[r], rows, cols);
    const auto dec = svd(m);
    count_svd(flops, m);
    const auto k = retained_rank(dec.sigma, d_cut, tol);
    const auto ki = static_cast<Eigen::Index>(k);
    const auto u = from_matrix(dec.u.leftCols(ki), {bound(r), horiz(r), bound(r + 1)},
                               {boundary[r].dim_of(bound(r)), boundary[r].dim_of(horiz(r)), k});
    const std::vector<int> order{bound(r), bound(r + 1), horiz(r)};
    boundary[r] = permuted(u, order);
    const Matrix w = dec.sigma.head(ki).asDiagonal() * dec.v.topRows(ki);
    auto next = contract(from_matrix(w, {scratch, bound(r + 1)}, {k, static_cast<std::size_t>(m.cols())}),
                         boundary[r + 1], flops);
    boundary[r + 1] = relabeled(std::move(next), scratch, bound(r + 1));
  }
}

void merge(FlopCounter* into, const FlopCounter& from) {
  if (into == nullptr) return;
  into->total += from.total;
  into->max_step = std::max(into->max_step, from.max_step);
  into->steps += from.steps;
}

Vector random_unit_entries(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const double re = normal(rng);
    const double im = normal(rng);
    v(k) = Scalar(re, im);
  }
  return v / v.norm();
}

}  // namespace

void PepsState::validate() const {
  if (rows == 0 || cols == 0) throw DimensionError("PepsState: empty lattice");
  if (sites.size() != rows * cols) throw DimensionError("PepsState: one tensor per site required");
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto& t = site(r, c);
      const std::string where = "PepsState: site (" + std::to_string(r) + "," + std::to_string(c) + ")";
      if (t.order() != 5 || t.dim(phys) != 2) throw DimensionError(where + " must have shape {2, up, down, left, right}");
      if (r == 0 && t.dim(up) != 1) throw DimensionError(where + " has an open upper bond");
      if (r + 1 == rows && t.dim(down) != 1) throw DimensionError(where + " has an open lower bond");
      if (c == 0 && t.dim(left) != 1) throw DimensionError(where + " has an open left bond");
      if (c + 1 == cols && t.dim(right) != 1) throw DimensionError(where + " has an open right bond");
      if (r + 1 < rows && t.dim(down) != site(r + 1, c).dim(up)) throw DimensionError(where + " vertical bond mismatch");
      if (c + 1 < cols && t.dim(right) != site(r, c + 1).dim(left)) {
        throw DimensionError(where + " horizontal bond mismatch");
      }
    }
  }
}

PepsState random_peps(std::size_t rows, std::size_t cols, std::size_t bond_dim, std::uint64_t seed) {
  if (bond_dim == 0) throw DimensionError("random_peps: bond dimension must be positive");
  std::mt19937_64 rng(seed);
  PepsState x{rows, cols, {}};
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::vector<std::size_t> shape{2, r == 0 ? 1 : bond_dim, r + 1 == rows ? 1 : bond_dim, c == 0 ? 1 : bond_dim,
                                     c + 1 == cols ? 1 : bond_dim};
      std::size_t n = 1;
      for (auto d : shape) n *= d;
      const Vector v = random_unit_entries(n, rng) * std::sqrt(2.0);
      x.sites.emplace_back(std::move(shape), std::vector<Scalar>(v.data(), v.data() + v.size()));
    }
  }
  x.validate();
  return x;
}

PepsState peps_from_mps(const MpsState& x) {
  x.validate();
  if (x.boundary != Boundary::open) throw DimensionError("peps_from_mps: open chain required");
  if (!(x.blocking == Blocking::ones(x.physical_sites()))) {
    throw DimensionError("peps_from_mps: one site per block required");
  }
  PepsState out{1, x.blocks(), {}};
  for (const auto& s : x.sites) {
    DenseTensor t({2, 1, 1, s.rows(), s.cols()});
    for (std::size_t b = 0; b < s.cols(); ++b) {
      for (std::size_t a = 0; a < s.rows(); ++a) {
        for (std::size_t i = 0; i < 2; ++i) {
          t.at({i, 0, 0, a, b}) = s.slices[i](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        }
      }
    }
    out.sites.push_back(std::move(t));
  }
  out.validate();
  return out;
}

DenseState to_dense(const PepsState& x, const Tolerances& tol) {
  x.validate();
  const std::size_t p = x.physical_sites();
  if (p > 12 || p > tol.dense_site_cap) {
    throw CapExceeded("PEPS to_dense: " + std::to_string(p) + " sites above the dense cap");
  }
  const auto vlabel = [&](std::size_t r, std::size_t c) { return -1 - static_cast<int>(r * x.cols + c); };
  const auto hlabel = [&](std::size_t r, std::size_t c) { return -1 - static_cast<int>(p + r * x.cols + c); };
  LabeledTensor acc = LabeledTensor::scalar(1.0);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) {
      const auto& t = x.site(r, c);
      // Edge bonds have size one, so dropping them leaves the data as is.
      std::vector<int> labels{static_cast<int>(r * x.cols + c)};
      std::vector<std::size_t> dims{2};
      if (r > 0) { labels.push_back(vlabel(r - 1, c)); dims.push_back(t.dim(up)); }
      if (r + 1 < x.rows) { labels.push_back(vlabel(r, c)); dims.push_back(t.dim(down)); }
      if (c > 0) { labels.push_back(hlabel(r, c - 1)); dims.push_back(t.dim(left)); }
      if (c + 1 < x.cols) { labels.push_back(hlabel(r, c)); dims.push_back(t.dim(right)); }
      acc = contract(acc, LabeledTensor(std::move(labels), std::move(dims),
                                        std::vector<Scalar>(t.data().begin(), t.data().end())));
    }
  }
  std::vector<int> order(p);
  for (std::size_t s = 0; s < p; ++s) order[s] = static_cast<int>(s);
  const auto dense = permuted(acc, order);
  return DenseState(p, Eigen::Map<const Vector>(dense.data.data(), static_cast<Eigen::Index>(dense.size())));
}

Scalar inner_peps(const PepsState& bra, const PepsState& ket, std::size_t d_cut, FlopCounter* flops,
                  PepsPhaseFlops* phases, const Tolerances& tol) {
  bra.validate();
  ket.validate();
  if (bra.rows != ket.rows || bra.cols != ket.cols) throw DimensionError("inner_peps: lattices differ");
  if (d_cut == 0) throw DimensionError("inner_peps: d_cut must be positive");
  const std::size_t rows = bra.rows;

  PepsPhaseFlops ph;
  std::vector<LabeledTensor> boundary;
  for (std::size_t r = 0; r < rows; ++r) {
    boundary.emplace_back(std::vector<int>{bound(r), bound(r + 1), horiz(r)}, std::vector<std::size_t>{1, 1, 1},
                          std::vector<Scalar>{1.0});
  }
  for (std::size_t c = 0; c < bra.cols; ++c) {
    absorb(boundary, bra, ket, c, ph);
    // Nothing to cut while every boundary bond already fits.
    const bool fits = std::all_of(boundary.begin(), boundary.end(),
                                  [&](const LabeledTensor& t) { return t.dims[1] <= d_cut; });
    if (c + 1 < bra.cols && rows > 1 && !fits) {
      orthonormalize_from_bottom(boundary, &ph.compress, tol);
      truncate_from_top(boundary, d_cut, &ph.compress, tol);
    }
  }
  LabeledTensor acc = boundary[0];
  for (std::size_t r = 1; r < rows; ++r) acc = contract(acc, boundary[r], &ph.absorb);
  if (acc.size() != 1) throw DimensionError("inner_peps: open indices left after the sweep");
  merge(flops, ph.physical);
  merge(flops, ph.absorb);
  merge(flops, ph.compress);
  if (phases != nullptr) *phases = ph;
  return acc.data[0];
}

}  // namespace qtn
