#include "qtn/mps_als.hpp"

#include <cmath>

#include "qtn/linalg.hpp"

namespace qtn {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

// x (x) y with the index of y running fastest.
Matrix kron(const Matrix& x, const Matrix& y) {
  Matrix out(x.rows() * y.rows(), x.cols() * y.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      out.block(r * y.rows(), c * y.cols(), y.rows(), y.cols()) = x(r, c) * y;
    }
  }
  return out;
}

struct SiteOps {
  std::vector<double> alpha;
  std::vector<std::vector<Matrix>> q;  // q[k][j], explicit block matrices
};

SiteOps site_ops(const BlockedHamiltonian& bh) {
  SiteOps ops{bh.coefficients, {}};
  for (const auto& row : bh.blocks) {
    std::vector<Matrix> m;
    for (const auto& b : row) m.push_back(b.matrix());
    ops.q.push_back(std::move(m));
  }
  return ops;
}

SiteTensor site_from_vector(const Vector& v, std::size_t dl, std::size_t phys, std::size_t dr) {
  auto s = SiteTensor::zeros(phys, dl, dr);
  for (std::size_t b = 0; b < dr; ++b) {
    for (std::size_t i = 0; i < phys; ++i) {
      for (std::size_t a = 0; a < dl; ++a) s.slices[i](idx(a), idx(b)) = v(idx(a + dl * (i + phys * b)));
    }
  }
  return s;
}

// Moves the orthogonality center from site j to j+1 (right) or j-1 (left).
void shift_center(MpsState& x, std::size_t j, Direction dir, const Tolerances& tol, FlopCounter* flops) {
  auto& s = x.sites[j];
  if (dir == Direction::right) {
    const Matrix m = s.stacked_rows();
    const auto dec = svd(m);
    count(flops, static_cast<std::uint64_t>(m.rows()) * m.cols() * std::min(m.rows(), m.cols()));
    const auto r = idx(retained_rank(dec.sigma, static_cast<std::size_t>(dec.sigma.size()), tol));
    s = SiteTensor::from_stacked_rows(dec.u.leftCols(r), s.phys());
    const Matrix carry = dec.sigma.head(r).cast<Scalar>().asDiagonal() * dec.v.topRows(r);
    for (auto& n : x.sites[j + 1].slices) n = carry * n;
  } else {
    const Matrix m = s.stacked_cols();
    const auto dec = svd(m);
    count(flops, static_cast<std::uint64_t>(m.rows()) * m.cols() * std::min(m.rows(), m.cols()));
    const auto r = idx(retained_rank(dec.sigma, static_cast<std::size_t>(dec.sigma.size()), tol));
    s = SiteTensor::from_stacked_cols(dec.v.topRows(r), s.phys());
    const Matrix carry = dec.u.leftCols(r) * dec.sigma.head(r).cast<Scalar>().asDiagonal();
    for (auto& n : x.sites[j - 1].slices) n = n * carry;
  }
}

// Environment of sites < j+1 from the environment of sites < j, bra x ket.
Matrix grow_left(const Matrix& l, const SiteTensor& s, const Matrix& q, FlopCounter* flops) {
  const std::size_t d = s.phys();
  std::vector<Matrix> t(d);
  for (std::size_t i = 0; i < d; ++i) {
    t[i] = l * s.slices[i];
    count(flops, static_cast<std::uint64_t>(l.rows()) * l.cols() * s.cols());
  }
  Matrix out = Matrix::Zero(idx(s.cols()), idx(s.cols()));
  for (std::size_t ip = 0; ip < d; ++ip) {
    Matrix acc = Matrix::Zero(idx(s.rows()), idx(s.cols()));
    bool any = false;
    for (std::size_t i = 0; i < d; ++i) {
      const Scalar w = q(idx(ip), idx(i));
      if (w == Scalar{0.0}) continue;
      acc += w * t[i];
      any = true;
    }
    if (!any) continue;
    out.noalias() += s.slices[ip].adjoint() * acc;
    count(flops, static_cast<std::uint64_t>(s.cols()) * s.rows() * s.cols());
  }
  return out;
}

// Environment of sites >= j from the environment of sites >= j+1, bra x ket.
Matrix grow_right(const Matrix& r, const SiteTensor& s, const Matrix& q, FlopCounter* flops) {
  const std::size_t d = s.phys();
  std::vector<Matrix> t(d);
  for (std::size_t i = 0; i < d; ++i) {
    t[i] = r * s.slices[i].transpose();
    count(flops, static_cast<std::uint64_t>(r.rows()) * r.cols() * s.rows());
  }
  Matrix out = Matrix::Zero(idx(s.rows()), idx(s.rows()));
  for (std::size_t ip = 0; ip < d; ++ip) {
    Matrix acc = Matrix::Zero(idx(s.cols()), idx(s.rows()));
    bool any = false;
    for (std::size_t i = 0; i < d; ++i) {
      const Scalar w = q(idx(ip), idx(i));
      if (w == Scalar{0.0}) continue;
      acc += w * t[i];
      any = true;
    }
    if (!any) continue;
    out.noalias() += s.slices[ip].conjugate() * acc;
    count(flops, static_cast<std::uint64_t>(s.rows()) * s.cols() * s.rows());
  }
  return out;
}

// Transfer matrix of one site with operator q, rows (a' + Dl a), columns (b' + Dr b).
Matrix transfer(const SiteTensor& s, const Matrix& q, FlopCounter* flops) {
  const std::size_t d = s.phys();
  Matrix out = Matrix::Zero(idx(s.rows() * s.rows()), idx(s.cols() * s.cols()));
  for (std::size_t ip = 0; ip < d; ++ip) {
    const Matrix bra = s.slices[ip].conjugate();
    for (std::size_t i = 0; i < d; ++i) {
      const Scalar w = q(idx(ip), idx(i));
      if (w == Scalar{0.0}) continue;
      out += w * kron(s.slices[i], bra);
      count(flops, static_cast<std::uint64_t>(out.size()));
    }
  }
  return out;
}

Matrix multiply(const Matrix& a, const Matrix& b, FlopCounter* flops) {
  count(flops, static_cast<std::uint64_t>(a.rows()) * a.cols() * b.cols());
  return a * b;
}

class AlsRun {
 public:
  AlsRun(const SpinHamiltonian& h, const MpsAlsOptions& options)
      : options_(options), tol_(options.tol) {
    const Blocking blocking = options.blocking.value_or(Blocking::ones(h.sites));
    if (blocking.sites() != h.sites) throw DimensionError("als_ground_state: blocking does not cover p sites");
    if (options.bond_dim == 0) throw DimensionError("als_ground_state: bond dimension must be positive");
    if (options.sweeps == 0) throw DimensionError("als_ground_state: need at least one sweep");
    ops_ = site_ops(regroup(h, blocking));
    // The denominator is carried as one extra identity term.
    std::vector<Matrix> identity;
    for (std::size_t j = 0; j < blocking.blocks(); ++j) {
      identity.push_back(Matrix::Identity(idx(blocking.dim(j)), idx(blocking.dim(j))));
    }
    ops_.q.push_back(std::move(identity));

    x_ = random_mps(h.sites, options.bond_dim, options.boundary, blocking, options.seed);
    auto gauged = normalize_right_sweep(x_, tol_);
    x_ = std::move(gauged.state);
    const double norm2 = inner(x_, x_).real();
    for (auto& m : x_.sites.front().slices) m /= std::sqrt(norm2);
  }

  MpsAlsResult run() {
    const std::size_t q = x_.sites.size();
    build_right_environments();
    init_left_environments();
    MpsAlsResult result;
    record(result, 0, 0, current_energy());

    double previous = result.trace.back().energy;
    std::size_t quiet = 0;
    for (std::size_t sweep = 1; sweep <= options_.sweeps; ++sweep) {
      if (q == 1) {
        record(result, sweep, 0, update(0));
      } else {
        for (std::size_t j = 0; j + 1 < q; ++j) {
          record(result, sweep, j, update(j));
          shift_center(x_, j, Direction::right, tol_, &flops_);
          extend_left(j);
        }
        for (std::size_t j = q - 1; j > 0; --j) {
          record(result, sweep, j, update(j));
          shift_center(x_, j, Direction::left, tol_, &flops_);
          extend_right(j);
        }
      }
      result.sweeps_run = sweep;
      const double e = result.trace.back().energy;
      quiet = std::abs(e - previous) < tol_.convergence ? quiet + 1 : 0;
      previous = e;
      if (quiet >= 2) {
        result.converged = true;
        break;
      }
    }
    result.energy = result.trace.back().energy;
    result.state = x_;
    return result;
  }

 private:
  bool periodic() const { return x_.boundary == Boundary::periodic; }
  std::size_t terms() const { return ops_.q.size(); }  // Hamiltonian terms + identity

  void record(MpsAlsResult& r, std::size_t sweep, std::size_t position, double energy) {
    r.trace.push_back({1, sweep, position, energy, flops_.total, false, clock_.seconds()});
  }

  double current_energy() {
    Scalar num{0.0};
    Scalar den{0.0};
    if (!periodic()) {
      // Full contraction through the environments of site 0.
      for (std::size_t k = 0; k < terms(); ++k) {
        const Matrix l = grow_left(Matrix::Ones(1, 1), x_.sites[0], ops_.q[k][0], &flops_);
        const Scalar v = l.cwiseProduct(right_[k][1]).sum();
        if (k + 1 == terms()) den = v; else num += ops_.alpha[k] * v;
      }
    } else {
      for (std::size_t k = 0; k < terms(); ++k) {
        const Scalar v = right_[k][0].trace();
        if (k + 1 == terms()) den = v; else num += ops_.alpha[k] * v;
      }
    }
    return num.real() / den.real();
  }

  void build_right_environments() {
    const std::size_t q = x_.sites.size();
    right_.assign(terms(), std::vector<Matrix>(q + 1));
    for (std::size_t k = 0; k < terms(); ++k) {
      if (!periodic()) {
        right_[k][q] = Matrix::Ones(1, 1);
        for (std::size_t j = q; j-- > 0;) right_[k][j] = grow_right(right_[k][j + 1], x_.sites[j], ops_.q[k][j], &flops_);
      } else {
        const auto d0 = idx(x_.sites.front().rows());
        right_[k][q] = Matrix::Identity(d0 * d0, d0 * d0);
        for (std::size_t j = q; j-- > 0;) {
          right_[k][j] = multiply(transfer(x_.sites[j], ops_.q[k][j], &flops_), right_[k][j + 1], &flops_);
        }
      }
    }
  }

  void init_left_environments() {
    const std::size_t q = x_.sites.size();
    left_.assign(terms(), std::vector<Matrix>(q + 1));
    for (std::size_t k = 0; k < terms(); ++k) {
      if (!periodic()) {
        left_[k][0] = Matrix::Ones(1, 1);
      } else {
        const auto d0 = idx(x_.sites.front().rows());
        left_[k][0] = Matrix::Identity(d0 * d0, d0 * d0);
      }
    }
  }

  void extend_left(std::size_t j) {
    for (std::size_t k = 0; k < terms(); ++k) {
      left_[k][j + 1] = periodic() ? multiply(left_[k][j], transfer(x_.sites[j], ops_.q[k][j], &flops_), &flops_)
                                   : grow_left(left_[k][j], x_.sites[j], ops_.q[k][j], &flops_);
    }
  }

  void extend_right(std::size_t j) {
    for (std::size_t k = 0; k < terms(); ++k) {
      right_[k][j] = periodic() ? multiply(transfer(x_.sites[j], ops_.q[k][j], &flops_), right_[k][j + 1], &flops_)
                                : grow_right(right_[k][j + 1], x_.sites[j], ops_.q[k][j], &flops_);
    }
  }

  // Effective matrix of term k at site j; index a + Dl (i + d b).
  void accumulate_effective(Matrix& out, Scalar alpha, std::size_t k, std::size_t j) {
    const auto& s = x_.sites[j];
    const std::size_t dl = s.rows(), dr = s.cols(), d = s.phys();
    const Matrix& q = ops_.q[k][j];
    Matrix env;
    if (periodic()) env = multiply(right_[k][j + 1], left_[k][j], &flops_);  // (b' + Dr b, a' + Dl a)
    for (std::size_t ip = 0; ip < d; ++ip) {
      for (std::size_t i = 0; i < d; ++i) {
        const Scalar w = alpha * q(idx(ip), idx(i));
        if (w == Scalar{0.0}) continue;
        for (std::size_t b = 0; b < dr; ++b) {
          for (std::size_t bp = 0; bp < dr; ++bp) {
            for (std::size_t a = 0; a < dl; ++a) {
              const auto col = idx(a + dl * (i + d * b));
              for (std::size_t ap = 0; ap < dl; ++ap) {
                const auto row = idx(ap + dl * (ip + d * bp));
                const Scalar e = periodic() ? env(idx(bp + dr * b), idx(ap + dl * a))
                                            : left_[k][j](idx(ap), idx(a)) * right_[k][j + 1](idx(bp), idx(b));
                out(row, col) += w * e;
              }
            }
          }
        }
        count(&flops_, static_cast<std::uint64_t>(dl * dl * dr * dr));
      }
    }
  }

  double update(std::size_t j) {
    const auto& s = x_.sites[j];
    const std::size_t dl = s.rows(), dr = s.cols(), d = s.phys();
    const auto n = idx(dl * d * dr);
    Matrix heff = Matrix::Zero(n, n);
    const std::size_t m = terms() - 1;
    for (std::size_t k = 0; k < m; ++k) accumulate_effective(heff, ops_.alpha[k], k, j);
    EigenPair pair;
    if (!periodic()) {
      auto lowest = hermitian_eig_lowest(heff, 1, tol_);
      pair = {lowest.values(0), lowest.vectors.col(0)};
    } else {
      Matrix neff = Matrix::Zero(n, n);
      accumulate_effective(neff, 1.0, m, j);
      pair = lowest_pencil_pair(heff, neff, tol_).pair;
    }
    count(&flops_, static_cast<std::uint64_t>(n) * n * n);
    x_.sites[j] = site_from_vector(pair.vector, dl, d, dr);
    return pair.value;
  }

  MpsAlsOptions options_;
  Tolerances tol_;
  SiteOps ops_;
  MpsState x_;
  std::vector<std::vector<Matrix>> left_, right_;
  FlopCounter flops_;
  Stopwatch clock_;
};

}  // namespace

MpsAlsResult als_ground_state(const SpinHamiltonian& h, const MpsAlsOptions& options) {
  try {
    return AlsRun(h, options).run();
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("mps als: ") + e.what());
  }
}

}  // namespace qtn
