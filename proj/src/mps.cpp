#include "qtn/mps.hpp"

#include <cmath>
#include <random>

#include "qtn/linalg.hpp"

namespace qtn {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

void require_compatible(const MpsState& a, const MpsState& b, const char* what) {
  if (a.boundary != b.boundary) throw DimensionError(std::string(what) + ": boundary kinds differ");
  if (!(a.blocking == b.blocking)) throw DimensionError(std::string(what) + ": blockings differ");
  if (a.sites.size() != b.sites.size()) throw DimensionError(std::string(what) + ": site counts differ");
}

// Open-chain style zipper from a given start matrix E (bra bond x ket bond).
Matrix zipper(Matrix e, const MpsState& bra, const MpsState& ket, FlopCounter* flops) {
  for (std::size_t j = 0; j < ket.sites.size(); ++j) {
    const auto& b = bra.sites[j];
    const auto& k = ket.sites[j];
    Matrix next = Matrix::Zero(idx(b.cols()), idx(k.cols()));
    for (std::size_t i = 0; i < k.phys(); ++i) {
      const Matrix t = e * k.slices[i];
      next.noalias() += b.slices[i].adjoint() * t;
      count(flops, static_cast<std::uint64_t>(e.rows()) * e.cols() * k.cols() +
                       static_cast<std::uint64_t>(b.cols()) * b.rows() * k.cols());
    }
    e = std::move(next);
  }
  return e;
}

double gaussian_scale(std::size_t phys, std::size_t right) {
  return 1.0 / std::sqrt(static_cast<double>(phys * right));
}

}  // namespace

SiteTensor SiteTensor::zeros(std::size_t phys, std::size_t rows, std::size_t cols) {
  return SiteTensor(std::vector<Matrix>(phys, Matrix::Zero(idx(rows), idx(cols))));
}

Matrix SiteTensor::stacked_rows() const {
  const auto r = idx(rows());
  Matrix m(r * idx(phys()), idx(cols()));
  for (std::size_t i = 0; i < phys(); ++i) m.middleRows(r * idx(i), r) = slices[i];
  return m;
}

Matrix SiteTensor::stacked_cols() const {
  const auto c = idx(cols());
  Matrix m(idx(rows()), c * idx(phys()));
  for (std::size_t i = 0; i < phys(); ++i) m.middleCols(c * idx(i), c) = slices[i];
  return m;
}

SiteTensor SiteTensor::from_stacked_rows(const Matrix& m, std::size_t phys) {
  if (m.rows() % idx(phys) != 0) throw DimensionError("from_stacked_rows: row count not divisible");
  const auto r = m.rows() / idx(phys);
  std::vector<Matrix> s;
  for (std::size_t i = 0; i < phys; ++i) s.emplace_back(m.middleRows(r * idx(i), r));
  return SiteTensor(std::move(s));
}

SiteTensor SiteTensor::from_stacked_cols(const Matrix& m, std::size_t phys) {
  if (m.cols() % idx(phys) != 0) throw DimensionError("from_stacked_cols: column count not divisible");
  const auto c = m.cols() / idx(phys);
  std::vector<Matrix> s;
  for (std::size_t i = 0; i < phys; ++i) s.emplace_back(m.middleCols(c * idx(i), c));
  return SiteTensor(std::move(s));
}

void MpsState::validate() const {
  if (sites.size() != blocking.blocks()) throw DimensionError("MpsState: one site tensor per block required");
  for (std::size_t j = 0; j < sites.size(); ++j) {
    const auto& s = sites[j];
    if (s.phys() != blocking.dim(j)) throw DimensionError("MpsState: physical dimension differs from 2^t");
    for (const auto& m : s.slices) {
      if (static_cast<std::size_t>(m.rows()) != s.rows() || static_cast<std::size_t>(m.cols()) != s.cols()) {
        throw DimensionError("MpsState: slices of one site differ in shape");
      }
    }
    if (s.rows() == 0 || s.cols() == 0) throw DimensionError("MpsState: empty bond");
    const auto& next = sites[(j + 1) % sites.size()];
    const bool closing = j + 1 == sites.size();
    if (!closing && s.cols() != next.rows()) throw DimensionError("MpsState: bond dimensions do not chain");
  }
  if (boundary == Boundary::open) {
    if (sites.front().rows() != 1 || sites.back().cols() != 1) {
      throw DimensionError("MpsState: open chain needs unit outer bonds");
    }
  } else if (sites.back().cols() != sites.front().rows()) {
    throw DimensionError("MpsState: periodic chain does not close");
  }
}

std::vector<std::size_t> MpsState::bond_dims() const {
  std::vector<std::size_t> d;
  for (const auto& s : sites) d.push_back(s.rows());
  d.push_back(sites.back().cols());
  return d;
}

Scalar evaluate(const MpsState& x, std::span<const std::size_t> block_index) {
  if (block_index.size() != x.sites.size()) throw DimensionError("evaluate: one index per block required");
  Matrix prod = Matrix::Identity(idx(x.sites.front().rows()), idx(x.sites.front().rows()));
  for (std::size_t j = 0; j < x.sites.size(); ++j) {
    if (block_index[j] >= x.sites[j].phys()) throw DimensionError("evaluate: index out of range");
    prod = prod * x.sites[j].slices[block_index[j]];
  }
  return prod.trace();
}

Scalar evaluate_index(const MpsState& x, std::size_t index) {
  if (index >= pow2(x.physical_sites())) throw DimensionError("evaluate_index: index out of range");
  std::vector<std::size_t> block_index;
  for (std::size_t j = 0; j < x.blocking.blocks(); ++j) {
    block_index.push_back((index >> x.blocking.start(j)) & (x.blocking.dim(j) - 1));
  }
  return evaluate(x, block_index);
}

DenseState to_dense(const MpsState& x, const Tolerances& tol) {
  x.validate();
  const std::size_t p = x.physical_sites();
  if (p > tol.dense_site_cap) throw CapExceeded("mps to_dense: p exceeds the dense cap");
  const std::size_t d0 = x.sites.front().rows();
  Vector out = Vector::Zero(idx(pow2(p)));
  // One pass per value of the closing bond; open chains have a single one.
  for (std::size_t s = 0; s < d0; ++s) {
    Matrix prefix = Matrix::Zero(1, idx(d0));
    prefix(0, idx(s)) = 1.0;
    for (const auto& site : x.sites) {
      const auto n = prefix.rows();
      Matrix next(n * idx(site.phys()), idx(site.cols()));
      for (std::size_t i = 0; i < site.phys(); ++i) next.middleRows(n * idx(i), n).noalias() = prefix * site.slices[i];
      prefix = std::move(next);
    }
    out += prefix.col(idx(s));
  }
  return DenseState(p, std::move(out));
}

MpsState random_mps(std::size_t p, std::size_t bond_dim, Boundary boundary, const Blocking& blocking,
                    std::uint64_t seed) {
  if (blocking.sites() != p) throw DimensionError("random_mps: blocking does not cover p sites");
  if (bond_dim == 0) throw DimensionError("random_mps: bond dimension must be positive");
  const std::size_t q = blocking.blocks();
  std::vector<std::size_t> bonds(q + 1, bond_dim);
  if (boundary == Boundary::open) {
    bonds.front() = bonds.back() = 1;
    for (std::size_t j = 1; j < q; ++j) {
      const std::size_t left = blocking.start(j);
      const std::size_t right = p - left;
      std::size_t cap = bond_dim;
      if (left < 63) cap = std::min(cap, pow2(left));
      if (right < 63) cap = std::min(cap, pow2(right));
      bonds[j] = cap;
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MpsState x{boundary, blocking, {}};
  for (std::size_t j = 0; j < q; ++j) {
    const std::size_t phys = blocking.dim(j);
    const double scale = gaussian_scale(phys, bonds[j + 1]) / std::sqrt(2.0);
    auto site = SiteTensor::zeros(phys, bonds[j], bonds[j + 1]);
    for (auto& m : site.slices) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
          const double re = normal(rng);
          const double im = normal(rng);
          m(r, c) = scale * Scalar(re, im);
        }
      }
    }
    x.sites.push_back(std::move(site));
  }
  return x;
}

MpsState from_unit_vector(std::size_t index, std::size_t p, std::optional<Blocking> blocking) {
  const Blocking b = blocking.value_or(Blocking::ones(p));
  if (b.sites() != p) throw DimensionError("from_unit_vector: blocking does not cover p sites");
  if (index >= pow2(p)) throw DimensionError("from_unit_vector: index out of range");
  MpsState x{Boundary::open, b, {}};
  for (std::size_t j = 0; j < b.blocks(); ++j) {
    auto site = SiteTensor::zeros(b.dim(j), 1, 1);
    site.slices[(index >> b.start(j)) & (b.dim(j) - 1)](0, 0) = 1.0;
    x.sites.push_back(std::move(site));
  }
  return x;
}

MpsState add(const MpsState& x, const MpsState& y) {
  require_compatible(x, y, "add");
  x.validate();
  y.validate();
  const std::size_t q = x.sites.size();
  MpsState out{x.boundary, x.blocking, {}};
  for (std::size_t j = 0; j < q; ++j) {
    const auto& a = x.sites[j];
    const auto& b = y.sites[j];
    const bool open = x.boundary == Boundary::open;
    const bool first = open && j == 0;
    const bool last = open && j + 1 == q;
    std::vector<Matrix> slices;
    for (std::size_t i = 0; i < a.phys(); ++i) {
      const Matrix& ma = a.slices[i];
      const Matrix& mb = b.slices[i];
      Matrix m;
      if (first && last) {
        m = ma + mb;
      } else if (first) {
        m.resize(1, ma.cols() + mb.cols());
        m << ma, mb;
      } else if (last) {
        m.resize(ma.rows() + mb.rows(), 1);
        m << ma, mb;
      } else {
        m = Matrix::Zero(ma.rows() + mb.rows(), ma.cols() + mb.cols());
        m.topLeftCorner(ma.rows(), ma.cols()) = ma;
        m.bottomRightCorner(mb.rows(), mb.cols()) = mb;
      }
      slices.push_back(std::move(m));
    }
    out.sites.emplace_back(std::move(slices));
  }
  return out;
}

MpsState scaled(const MpsState& x, Scalar s) {
  MpsState out = x;
  for (auto& m : out.sites.front().slices) m *= s;
  return out;
}

NormalizedMps normalize_left_sweep(const MpsState& x, const Tolerances& tol) {
  x.validate();
  NormalizedMps out{x, {std::vector<GaugeFlag>(x.sites.size(), GaugeFlag::none), x.sites.size() - 1}, 0.0};
  auto& sites = out.state.sites;
  for (std::size_t j = 0; j + 1 < sites.size(); ++j) {
    const auto dec = svd(sites[j].stacked_rows());
    const std::size_t r = retained_rank(dec.sigma, dec.sigma.size(), tol);
    sites[j] = SiteTensor::from_stacked_rows(dec.u.leftCols(idx(r)), sites[j].phys());
    const Matrix carry = dec.sigma.head(idx(r)).cast<Scalar>().asDiagonal() * dec.v.topRows(idx(r));
    for (auto& m : sites[j + 1].slices) m = carry * m;
    out.status.flags[j] = GaugeFlag::left;
  }
  for (const auto& m : sites.back().slices) out.gamma += m.squaredNorm();
  return out;
}

NormalizedMps normalize_right_sweep(const MpsState& x, const Tolerances& tol) {
  x.validate();
  NormalizedMps out{x, {std::vector<GaugeFlag>(x.sites.size(), GaugeFlag::none), 0}, 0.0};
  auto& sites = out.state.sites;
  for (std::size_t j = sites.size() - 1; j > 0; --j) {
    const auto dec = svd(sites[j].stacked_cols());
    const std::size_t r = retained_rank(dec.sigma, dec.sigma.size(), tol);
    sites[j] = SiteTensor::from_stacked_cols(dec.v.topRows(idx(r)), sites[j].phys());
    const Matrix carry = dec.u.leftCols(idx(r)) * dec.sigma.head(idx(r)).cast<Scalar>().asDiagonal();
    for (auto& m : sites[j - 1].slices) m = m * carry;
    out.status.flags[j] = GaugeFlag::right;
  }
  for (const auto& m : sites.front().slices) out.gamma += m.squaredNorm();
  return out;
}

double left_gauge_residual(const SiteTensor& s) {
  Matrix g = Matrix::Zero(idx(s.cols()), idx(s.cols()));
  for (const auto& m : s.slices) g.noalias() += m.adjoint() * m;
  return (g - Matrix::Identity(g.rows(), g.cols())).norm();
}

double right_gauge_residual(const SiteTensor& s) {
  Matrix g = Matrix::Zero(idx(s.rows()), idx(s.rows()));
  for (const auto& m : s.slices) g.noalias() += m * m.adjoint();
  return (g - Matrix::Identity(g.rows(), g.cols())).norm();
}

double gauge_residual(const MpsState& x, const GaugeStatus& status) {
  if (status.flags.size() != x.sites.size()) throw DimensionError("gauge_residual: status size mismatch");
  double worst = 0.0;
  for (std::size_t j = 0; j < x.sites.size(); ++j) {
    if (status.flags[j] == GaugeFlag::left) worst = std::max(worst, left_gauge_residual(x.sites[j]));
    if (status.flags[j] == GaugeFlag::right) worst = std::max(worst, right_gauge_residual(x.sites[j]));
  }
  return worst;
}

ShiftResult two_site_shift(const MpsState& x, std::size_t j, Direction direction,
                           std::optional<std::size_t> max_rank, const Tolerances& tol) {
  x.validate();
  if (j + 1 >= x.sites.size()) throw DimensionError("two_site_shift: j must have a right neighbour");
  const auto& a = x.sites[j];
  const auto& b = x.sites[j + 1];
  const auto dl = idx(a.rows());
  const auto dr = idx(b.cols());
  // Rows a + Dl * i_j, columns b + Dr * i_{j+1}.
  Matrix theta(dl * idx(a.phys()), dr * idx(b.phys()));
  for (std::size_t i1 = 0; i1 < a.phys(); ++i1) {
    for (std::size_t i2 = 0; i2 < b.phys(); ++i2) {
      theta.block(dl * idx(i1), dr * idx(i2), dl, dr) = a.slices[i1] * b.slices[i2];
    }
  }
  const auto dec = svd(theta);
  const std::size_t cap = max_rank.value_or(static_cast<std::size_t>(dec.sigma.size()));
  if (cap == 0) throw DimensionError("two_site_shift: max_rank must be positive");
  const std::size_t r = retained_rank(dec.sigma, cap, tol);
  const auto rr = idx(r);
  ShiftResult out{x, std::sqrt(dec.sigma.tail(dec.sigma.size() - rr).squaredNorm()), r};
  const auto sigma = dec.sigma.head(rr).cast<Scalar>().asDiagonal();
  if (direction == Direction::right) {
    out.state.sites[j] = SiteTensor::from_stacked_rows(dec.u.leftCols(rr), a.phys());
    out.state.sites[j + 1] = SiteTensor::from_stacked_cols(sigma * dec.v.topRows(rr), b.phys());
  } else {
    out.state.sites[j] = SiteTensor::from_stacked_rows(dec.u.leftCols(rr) * sigma, a.phys());
    out.state.sites[j + 1] = SiteTensor::from_stacked_cols(dec.v.topRows(rr), b.phys());
  }
  return out;
}

Scalar inner(const MpsState& bra, const MpsState& ket, FlopCounter* flops) {
  require_compatible(bra, ket, "inner");
  bra.validate();
  ket.validate();
  if (ket.boundary == Boundary::open) return zipper(Matrix::Ones(1, 1), bra, ket, flops)(0, 0);
  // Periodic: one zipper per pair of values on the closing bond, then trace.
  const std::size_t db = bra.sites.front().rows();
  const std::size_t dk = ket.sites.front().rows();
  Scalar total{0.0};
  for (std::size_t s = 0; s < dk; ++s) {
    for (std::size_t sb = 0; sb < db; ++sb) {
      Matrix e = Matrix::Zero(idx(db), idx(dk));
      e(idx(sb), idx(s)) = 1.0;
      total += zipper(std::move(e), bra, ket, flops)(idx(sb), idx(s));
    }
  }
  return total;
}

SiteTensor apply_site_operator(const Matrix& op, const SiteTensor& s, FlopCounter* flops) {
  if (static_cast<std::size_t>(op.cols()) != s.phys() || op.rows() != op.cols()) {
    throw DimensionError("apply_site_operator: operator size differs from physical dimension");
  }
  auto out = SiteTensor::zeros(s.phys(), s.rows(), s.cols());
  for (std::size_t i = 0; i < s.phys(); ++i) {
    for (std::size_t ip = 0; ip < s.phys(); ++ip) {
      const Scalar w = op(idx(i), idx(ip));
      if (w == Scalar{0.0}) continue;
      out.slices[i] += w * s.slices[ip];
      count(flops, static_cast<std::uint64_t>(s.rows()) * s.cols());
    }
  }
  return out;
}

namespace {

MpsState apply_term(const BlockedHamiltonian& bh, std::size_t k, const MpsState& x, FlopCounter* flops) {
  MpsState y = x;
  for (std::size_t j = 0; j < x.sites.size(); ++j) {
    const auto& op = bh.blocks[k][j];
    if (!op.is_identity()) y.sites[j] = apply_site_operator(op.matrix(), x.sites[j], flops);
  }
  return y;
}

}  // namespace

MpsState apply_hamiltonian(const SpinHamiltonian& h, const MpsState& x) {
  x.validate();
  if (h.term_count() == 0) throw DimensionError("apply_hamiltonian: empty Hamiltonian");
  const auto bh = regroup(h, x.blocking);
  std::optional<MpsState> sum;
  for (std::size_t k = 0; k < bh.term_count(); ++k) {
    auto term = scaled(apply_term(bh, k, x, nullptr), bh.coefficients[k]);
    sum = sum ? add(*sum, term) : std::move(term);
  }
  return *sum;
}

Scalar expectation_form(const SpinHamiltonian& h, const MpsState& bra, const MpsState& ket, FlopCounter* flops) {
  require_compatible(bra, ket, "expectation_form");
  const auto bh = regroup(h, ket.blocking);
  Scalar total{0.0};
  for (std::size_t k = 0; k < bh.term_count(); ++k) {
    total += bh.coefficients[k] * inner(bra, apply_term(bh, k, ket, flops), flops);
  }
  return total;
}

double expectation(const SpinHamiltonian& h, const MpsState& x, FlopCounter* flops) {
  return expectation_form(h, x, x, flops).real();
}

}  // namespace qtn
