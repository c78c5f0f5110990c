#include "qtn/parafac.hpp"

#include <random>

#include "qtn/linalg.hpp"

namespace qtn {

namespace {

void require_same_blocking(const Blocking& a, const Blocking& b, const char* where) {
  if (!(a == b)) throw DimensionError(std::string(where) + ": blocking mismatch (" + a.str() + " vs " + b.str() + ")");
}

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

}  // namespace

void BlockedCp::validate() const {
  if (weights.size() != factors.size()) throw DimensionError("BlockedCp: one weight per addend required");
  for (const auto& addend : factors) {
    if (addend.size() != blocking.blocks()) throw DimensionError("BlockedCp: one factor per block required");
    for (std::size_t i = 0; i < addend.size(); ++i) {
      if (static_cast<std::size_t>(addend[i].size()) != blocking.dim(i)) {
        throw DimensionError("BlockedCp: factor " + std::to_string(i) + " has length " +
                             std::to_string(addend[i].size()) + ", expected " + std::to_string(blocking.dim(i)));
      }
    }
  }
}

DenseState to_dense(const BlockedCp& x, const Tolerances& tol) {
  x.validate();
  const std::size_t p = x.blocking.sites();
  if (p > tol.dense_site_cap) throw CapExceeded("to_dense: " + std::to_string(p) + " sites above the dense cap");
  Vector out = Vector::Zero(static_cast<Eigen::Index>(pow2(p)));
  for (std::size_t l = 0; l < x.rank(); ++l) {
    Vector v = Vector::Constant(1, x.weights[l]);
    for (const auto& f : x.factors[l]) {
      Vector next(v.size() * f.size());
      for (Eigen::Index b = 0; b < f.size(); ++b) next.segment(b * v.size(), v.size()) = f(b) * v;
      v = std::move(next);
    }
    out += v;
  }
  return DenseState(p, std::move(out));
}

BlockedCp random_cp(const Blocking& blocking, std::size_t rank, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BlockedCp x{blocking, {}, std::vector<Scalar>(rank, 1.0)};
  for (std::size_t l = 0; l < rank; ++l) {
    std::vector<Vector> addend;
    for (std::size_t i = 0; i < blocking.blocks(); ++i) addend.push_back(random_unit(blocking.dim(i), rng));
    x.factors.push_back(std::move(addend));
  }
  return x;
}

BlockedCp normalized(const BlockedCp& x) {
  x.validate();
  BlockedCp out = x;
  for (std::size_t l = 0; l < out.rank(); ++l) {
    Scalar w = out.weights[l];
    bool zero = false;
    for (auto& f : out.factors[l]) {
      const double n = f.norm();
      if (n == 0.0) {
        zero = true;
        break;
      }
      f /= n;
      w *= n;
    }
    if (zero) {
      for (auto& f : out.factors[l]) f = Vector::Unit(f.size(), 0);
      w = 0.0;
    }
    out.weights[l] = w;
  }
  return out;
}

BlockedCp absorb_weights(const BlockedCp& x) {
  x.validate();
  BlockedCp out = x;
  for (std::size_t l = 0; l < out.rank(); ++l) {
    if (!out.factors[l].empty()) out.factors[l][0] *= out.weights[l];
    out.weights[l] = 1.0;
  }
  return out;
}

Scalar inner(const BlockedCp& y, const BlockedCp& x, FlopCounter* flops) {
  require_same_blocking(y.blocking, x.blocking, "inner");
  y.validate();
  x.validate();
  Scalar total = 0.0;
  for (std::size_t a = 0; a < y.rank(); ++a) {
    for (std::size_t b = 0; b < x.rank(); ++b) {
      Scalar prod = std::conj(y.weights[a]) * x.weights[b];
      std::uint64_t work = 0;
      for (std::size_t i = 0; i < x.modes(); ++i) {
        prod *= y.factors[a][i].dot(x.factors[b][i]);
        work += x.blocking.dim(i) + 1;
      }
      count(flops, work);
      total += prod;
    }
  }
  return total;
}

Scalar expectation_form(const BlockedHamiltonian& h, const BlockedCp& y, const BlockedCp& x, FlopCounter* flops) {
  require_same_blocking(y.blocking, x.blocking, "expectation_form");
  require_same_blocking(h.blocking, x.blocking, "expectation_form");
  y.validate();
  x.validate();
  const std::size_t q = x.modes();
  Scalar total = 0.0;
  std::vector<Vector> applied(q);
  for (std::size_t k = 0; k < h.term_count(); ++k) {
    Scalar term = 0.0;
    for (std::size_t b = 0; b < x.rank(); ++b) {
      for (std::size_t i = 0; i < q; ++i) applied[i] = h.blocks[k][i].apply(x.factors[b][i], flops);
      for (std::size_t a = 0; a < y.rank(); ++a) {
        Scalar prod = std::conj(y.weights[a]) * x.weights[b];
        std::uint64_t work = 0;
        for (std::size_t i = 0; i < q; ++i) {
          prod *= y.factors[a][i].dot(applied[i]);
          work += x.blocking.dim(i) + 1;
        }
        count(flops, work);
        term += prod;
      }
    }
    total += h.coefficients[k] * term;
  }
  return total;
}

BlockedCp apply_hamiltonian(const BlockedHamiltonian& h, const BlockedCp& x) {
  require_same_blocking(h.blocking, x.blocking, "apply_hamiltonian");
  x.validate();
  BlockedCp out{x.blocking, {}, {}};
  for (std::size_t k = 0; k < h.term_count(); ++k) {
    for (std::size_t l = 0; l < x.rank(); ++l) {
      std::vector<Vector> addend;
      for (std::size_t i = 0; i < x.modes(); ++i) addend.push_back(h.blocks[k][i].apply(x.factors[l][i]));
      addend[0] *= h.coefficients[k] * x.weights[l];
      out.factors.push_back(std::move(addend));
      out.weights.push_back(1.0);
    }
  }
  return out;
}

MpsState to_mps(const BlockedCp& x) {
  x.validate();
  if (x.rank() == 0) throw DimensionError("to_mps: empty CP state");
  const std::size_t q = x.modes();
  const std::size_t d = x.rank();
  MpsState out{Boundary::open, x.blocking, {}};
  for (std::size_t i = 0; i < q; ++i) {
    const std::size_t rows = i == 0 ? 1 : d;
    const std::size_t cols = i + 1 == q ? 1 : d;
    auto site = SiteTensor::zeros(x.blocking.dim(i), rows, cols);
    for (std::size_t j = 0; j < site.phys(); ++j) {
      auto& m = site.slices[j];
      const auto jj = static_cast<Eigen::Index>(j);
      for (std::size_t l = 0; l < d; ++l) {
        const auto ll = static_cast<Eigen::Index>(l);
        Scalar v = x.factors[l][i](jj);
        if (i == 0) v *= x.weights[l];
        if (q == 1) m(0, 0) += v;
        else if (i == 0) m(0, ll) = v;
        else if (i + 1 == q) m(ll, 0) = v;
        else m(ll, ll) = v;
      }
    }
    out.sites.push_back(std::move(site));
  }
  return out;
}

Matrix spectral_operator(const BlockedHamiltonian& h, std::size_t mode, SpectralVariant variant) {
  const std::size_t n = h.blocking.dim(mode);
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < h.term_count(); ++k) {
    const auto& op = h.blocks[k][mode];
    double w = 1.0;
    if (variant == SpectralVariant::local_weighted) {
      bool local = !op.is_identity();
      for (std::size_t j = 0; j < h.blocking.blocks() && local; ++j) {
        if (j != mode && !h.blocks[k][j].is_identity()) local = false;
      }
      if (!local) continue;
      w = h.coefficients[k];
    }
    for (std::size_t c = 0; c < n; ++c) {
      m.col(static_cast<Eigen::Index>(c)) += w * op.apply(Vector::Unit(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c)));
    }
  }
  return m;
}

BlockedCp spectral_init(const BlockedHamiltonian& h, std::size_t rank, SpectralVariant variant, std::uint64_t seed,
                        const Tolerances& tol) {
  if (rank == 0) throw DimensionError("spectral_init: rank must be positive");
  std::mt19937_64 rng(seed);
  const std::size_t q = h.blocking.blocks();
  BlockedCp x{h.blocking, std::vector<std::vector<Vector>>(rank, std::vector<Vector>(q)),
              std::vector<Scalar>(rank, 1.0)};
  for (std::size_t i = 0; i < q; ++i) {
    const std::size_t n = h.blocking.dim(i);
    const std::size_t found = std::min(rank, n);
    const auto eig = hermitian_eig_lowest(spectral_operator(h, i, variant), found, tol);
    for (std::size_t l = 0; l < rank; ++l) {
      x.factors[l][i] = l < found ? Vector(eig.vectors.col(static_cast<Eigen::Index>(l))) : random_unit(n, rng);
    }
  }
  return x;
}

}  // namespace qtn
