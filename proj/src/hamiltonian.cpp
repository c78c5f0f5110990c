#include "qtn/hamiltonian.hpp"

#include <sstream>

namespace qtn {

namespace {

const Scalar kI{0.0, 1.0};

// Applies a single-site operator acting on bit `bit` of the index, in place.
void apply_site(const SiteOperator& op, std::size_t bit, Vector& v, FlopCounter* flops) {
  const std::size_t n = static_cast<std::size_t>(v.size());
  const std::size_t mask = std::size_t{1} << bit;
  switch (op.kind) {
    case OperatorKind::Identity:
      return;
    case OperatorKind::PauliX:
      for (std::size_t i = 0; i < n; ++i) {
        if ((i & mask) == 0) std::swap(v(static_cast<Eigen::Index>(i)), v(static_cast<Eigen::Index>(i | mask)));
      }
      count(flops, n);
      return;
    case OperatorKind::PauliY:
      for (std::size_t i = 0; i < n; ++i) {
        if ((i & mask) != 0) continue;
        const auto lo = static_cast<Eigen::Index>(i);
        const auto hi = static_cast<Eigen::Index>(i | mask);
        const Scalar a = v(lo);
        v(lo) = -kI * v(hi);
        v(hi) = kI * a;
      }
      count(flops, n);
      return;
    case OperatorKind::PauliZ:
      for (std::size_t i = 0; i < n; ++i) {
        if ((i & mask) != 0) v(static_cast<Eigen::Index>(i)) = -v(static_cast<Eigen::Index>(i));
      }
      count(flops, n);
      return;
    case OperatorKind::Custom: {
      const auto& m = op.custom;
      for (std::size_t i = 0; i < n; ++i) {
        if ((i & mask) != 0) continue;
        const auto lo = static_cast<Eigen::Index>(i);
        const auto hi = static_cast<Eigen::Index>(i | mask);
        const Scalar a = v(lo);
        const Scalar b = v(hi);
        v(lo) = m(0, 0) * a + m(0, 1) * b;
        v(hi) = m(1, 0) * a + m(1, 1) * b;
      }
      count(flops, 2 * n);
      return;
    }
  }
}

}  // namespace

Eigen::Matrix2cd SiteOperator::matrix() const {
  Eigen::Matrix2cd m;
  switch (kind) {
    case OperatorKind::Identity:
      return Eigen::Matrix2cd::Identity();
    case OperatorKind::PauliX:
      m << 0.0, 1.0, 1.0, 0.0;
      return m;
    case OperatorKind::PauliY:
      m << 0.0, -kI, kI, 0.0;
      return m;
    case OperatorKind::PauliZ:
      m << 1.0, 0.0, 0.0, -1.0;
      return m;
    case OperatorKind::Custom:
      return custom;
  }
  return custom;
}

SpinHamiltonian::SpinHamiltonian(std::size_t p, std::vector<KroneckerTerm> t) : sites(p), terms(std::move(t)) {
  for (const auto& term : terms) {
    if (term.factors.size() != sites) throw DimensionError("SpinHamiltonian: term length differs from p");
  }
}

void SpinHamiltonian::add_term(double coefficient, const std::vector<std::pair<std::size_t, SiteOperator>>& ops) {
  KroneckerTerm term{coefficient, std::vector<SiteOperator>(sites, SiteOperator::identity())};
  for (const auto& [site, op] : ops) {
    if (site >= sites) throw DimensionError("add_term: site out of range");
    term.factors[site] = op;
  }
  terms.push_back(std::move(term));
}

Boundary parse_boundary(const std::string& name) {
  if (name == "open") return Boundary::open;
  if (name == "periodic") return Boundary::periodic;
  throw Error("unknown boundary '" + name + "' (expected open or periodic)");
}

std::string to_string(Boundary b) { return b == Boundary::open ? "open" : "periodic"; }

Blocking::Blocking(std::vector<std::size_t> w) : widths(std::move(w)) {
  if (widths.empty()) throw DimensionError("Blocking: no blocks");
  for (auto t : widths) {
    if (t == 0) throw DimensionError("Blocking: block widths must be positive");
  }
}

Blocking Blocking::ones(std::size_t p) { return Blocking(std::vector<std::size_t>(p, 1)); }

Blocking Blocking::parse(const std::string& text) {
  std::vector<std::size_t> widths;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    long value = 0;
    try {
      value = std::stol(item, &used);
    } catch (const std::exception&) {
      throw Error("invalid blocking '" + text + "'");
    }
    while (used < item.size() && item[used] == ' ') ++used;
    if (used != item.size() || value <= 0) throw Error("invalid blocking '" + text + "'");
    widths.push_back(static_cast<std::size_t>(value));
  }
  if (widths.empty()) throw Error("invalid blocking '" + text + "'");
  return Blocking(std::move(widths));
}

std::size_t Blocking::sites() const {
  std::size_t p = 0;
  for (auto t : widths) p += t;
  return p;
}

std::size_t Blocking::start(std::size_t block) const {
  if (block > widths.size()) throw DimensionError("Blocking: block out of range");
  std::size_t s = 0;
  for (std::size_t k = 0; k < block; ++k) s += widths[k];
  return s;
}

std::string Blocking::str() const {
  std::string out;
  for (std::size_t k = 0; k < widths.size(); ++k) {
    if (k > 0) out += ',';
    out += std::to_string(widths[k]);
  }
  return out;
}

BlockOperator::BlockOperator(std::vector<SiteOperator> factors) : factors_(std::move(factors)) {
  for (const auto& f : factors_) identity_ = identity_ && f.is_identity();
}

Vector BlockOperator::apply(const Vector& x, FlopCounter* flops) const {
  if (static_cast<std::size_t>(x.size()) != dim()) throw DimensionError("BlockOperator::apply: size mismatch");
  Vector y = x;
  for (std::size_t j = 0; j < factors_.size(); ++j) apply_site(factors_[j], j, y, flops);
  return y;
}

Matrix BlockOperator::matrix() const {
  // Kronecker product with the first site as the fastest (lowest) bit.
  Matrix m = Matrix::Identity(1, 1);
  for (const auto& f : factors_) {
    const Eigen::Matrix2cd q = f.matrix();
    Matrix next(2 * m.rows(), 2 * m.cols());
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) next.block(r * m.rows(), c * m.cols(), m.rows(), m.cols()) = q(r, c) * m;
    }
    m = std::move(next);
  }
  return m;
}

BlockedHamiltonian regroup(const SpinHamiltonian& h, const Blocking& b) {
  if (b.sites() != h.sites) throw DimensionError("regroup: blocking does not cover the p sites");
  BlockedHamiltonian out;
  out.blocking = b;
  for (const auto& term : h.terms) {
    out.coefficients.push_back(term.coefficient);
    std::vector<BlockOperator> row;
    for (std::size_t i = 0; i < b.blocks(); ++i) {
      row.emplace_back(std::vector<SiteOperator>(term.factors.begin() + static_cast<std::ptrdiff_t>(b.start(i)),
                                                 term.factors.begin() + static_cast<std::ptrdiff_t>(b.end(i))));
    }
    out.blocks.push_back(std::move(row));
  }
  return out;
}

SpinHamiltonian build_ising(std::size_t p, double lambda, Boundary boundary) {
  if (p < 2) throw DimensionError("build_ising: need at least 2 sites");
  SpinHamiltonian h(p, {});
  for (std::size_t k = 0; k + 1 < p; ++k) h.add_term(1.0, {{k, SiteOperator::z()}, {k + 1, SiteOperator::z()}});
  if (boundary == Boundary::periodic) h.add_term(1.0, {{p - 1, SiteOperator::z()}, {0, SiteOperator::z()}});
  for (std::size_t k = 0; k < p; ++k) h.add_term(lambda, {{k, SiteOperator::x()}});
  return h;
}

SpinHamiltonian build_heisenberg_xy(std::size_t p, double jx, double jy, double lambda, Boundary boundary) {
  if (p < 2) throw DimensionError("build_heisenberg_xy: need at least 2 sites");
  SpinHamiltonian h(p, {});
  auto bond = [&](std::size_t a, std::size_t b) {
    h.add_term(jx, {{a, SiteOperator::x()}, {b, SiteOperator::x()}});
    h.add_term(jy, {{a, SiteOperator::y()}, {b, SiteOperator::y()}});
  };
  for (std::size_t k = 0; k + 1 < p; ++k) bond(k, k + 1);
  if (boundary == Boundary::periodic) bond(p - 1, 0);
  for (std::size_t k = 0; k < p; ++k) h.add_term(lambda, {{k, SiteOperator::x()}});
  return h;
}

SpinHamiltonian build_ising_2d(std::size_t rows, std::size_t cols, double lambda, Boundary boundary) {
  if (rows == 0 || cols == 0 || rows * cols < 2) throw DimensionError("build_ising_2d: degenerate lattice");
  const std::size_t p = rows * cols;
  SpinHamiltonian h(p, {});
  auto site = [cols](std::size_t r, std::size_t c) { return r * cols + c; };
  auto zz = [&](std::size_t a, std::size_t b) { h.add_term(1.0, {{a, SiteOperator::z()}, {b, SiteOperator::z()}}); };
  const bool periodic = boundary == Boundary::periodic;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c + 1 < cols; ++c) zz(site(r, c), site(r, c + 1));
    if (periodic && cols >= 3) zz(site(r, cols - 1), site(r, 0));
  }
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r + 1 < rows; ++r) zz(site(r, c), site(r + 1, c));
    if (periodic && rows >= 3) zz(site(rows - 1, c), site(0, c));
  }
  for (std::size_t k = 0; k < p; ++k) h.add_term(lambda, {{k, SiteOperator::x()}});
  return h;
}

Matrix materialize_dense(const SpinHamiltonian& h, const Tolerances& tol) {
  if (h.sites > tol.dense_site_cap) {
    throw CapExceeded("materialize_dense: p = " + std::to_string(h.sites) + " exceeds the dense cap of " +
                      std::to_string(tol.dense_site_cap));
  }
  const std::size_t n = pow2(h.sites);
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<std::pair<std::size_t, Scalar>> entries, next;
  for (const auto& term : h.terms) {
    std::vector<Eigen::Matrix2cd> q;
    for (const auto& f : term.factors) q.push_back(f.matrix());
    for (std::size_t row = 0; row < n; ++row) {
      // Nonzero columns of this row of the Kronecker product, site by site.
      entries.assign(1, {0, Scalar{term.coefficient}});
      for (std::size_t j = 0; j < h.sites; ++j) {
        const int rb = static_cast<int>((row >> j) & 1U);
        next.clear();
        for (const auto& [col, value] : entries) {
          for (int cb = 0; cb < 2; ++cb) {
            const Scalar w = q[j](rb, cb);
            if (w != Scalar{0.0}) next.emplace_back(col | (static_cast<std::size_t>(cb) << j), value * w);
          }
        }
        std::swap(entries, next);
      }
      for (const auto& [col, value] : entries) {
        m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) += value;
      }
    }
  }
  return m;
}

DenseState apply(const SpinHamiltonian& h, const DenseState& x) {
  if (x.sites != h.sites) throw DimensionError("apply: state and Hamiltonian differ in p");
  Vector y = Vector::Zero(x.coefficients.size());
  for (const auto& term : h.terms) {
    Vector t = x.coefficients;
    for (std::size_t j = 0; j < h.sites; ++j) apply_site(term.factors[j], j, t, nullptr);
    y += term.coefficient * t;
  }
  return DenseState(h.sites, std::move(y));
}

}  // namespace qtn
