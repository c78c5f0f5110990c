#include "qtn/parafac_als.hpp"

#include <cmath>

#include "qtn/linalg.hpp"

namespace qtn {

namespace {

// Per-mode pair contractions of a CP state against every term:
// terms_[k][j](a, b) = <x_j^a, H_j^(k) x_j^b>, gram_[j](a, b) = <x_j^a, x_j^b>.
class CpContractions {
 public:
  CpContractions(const BlockedHamiltonian& h, FlopCounter* flops) : h_(h), flops_(flops) {}

  void refresh_all(const BlockedCp& x) {
    terms_.assign(h_.term_count(), std::vector<Matrix>(x.modes()));
    gram_.assign(x.modes(), Matrix());
    for (std::size_t j = 0; j < x.modes(); ++j) refresh(x, j);
  }

  void refresh(const BlockedCp& x, std::size_t j) {
    const auto d = static_cast<Eigen::Index>(x.rank());
    const auto n = static_cast<Eigen::Index>(x.blocking.dim(j));
    Matrix slab(n, d);
    for (Eigen::Index l = 0; l < d; ++l) slab.col(l) = x.factors[static_cast<std::size_t>(l)][j];
    gram_[j] = slab.adjoint() * slab;
    count(flops_, static_cast<std::uint64_t>(d * d * n));
    for (std::size_t k = 0; k < h_.term_count(); ++k) {
      const auto& op = h_.blocks[k][j];
      if (op.is_identity()) {
        terms_[k][j] = gram_[j];
        continue;
      }
      Matrix applied(n, d);
      for (Eigen::Index l = 0; l < d; ++l) applied.col(l) = op.apply(slab.col(l), flops_);
      terms_[k][j] = slab.adjoint() * applied;
      count(flops_, static_cast<std::uint64_t>(d * d * n));
    }
  }

  // Elementwise product over all modes except `skip` (pass modes() to keep all).
  Matrix term_except(std::size_t k, std::size_t skip) const { return product_except(terms_[k], skip); }
  Matrix gram_except(std::size_t skip) const { return product_except(gram_, skip); }

  double energy() const {
    const std::size_t all = gram_.size();
    Scalar num = 0.0;
    for (std::size_t k = 0; k < h_.term_count(); ++k) num += h_.coefficients[k] * term_except(k, all).sum();
    const Scalar den = gram_except(all).sum();
    if (!(std::abs(den) > 0.0)) throw NumericalError("CP ALS: state has zero norm");
    return (num / den).real();
  }

 private:
  static Matrix product_except(const std::vector<Matrix>& per_mode, std::size_t skip) {
    Matrix out;
    for (std::size_t j = 0; j < per_mode.size(); ++j) {
      if (j == skip) continue;
      if (out.size() == 0) out = per_mode[j];
      else out = out.cwiseProduct(per_mode[j]);
    }
    if (out.size() == 0) {
      const auto d = per_mode.empty() ? 0 : per_mode[0].rows();
      out = Matrix::Ones(d, d);
    }
    return out;
  }

  const BlockedHamiltonian& h_;
  FlopCounter* flops_;
  std::vector<std::vector<Matrix>> terms_;
  std::vector<Matrix> gram_;
};

// a(l' n + r, l n + c) += w(l', l) * op(r, c) for the addend pairs selected
// by rows/cols, built column by column from the matrix-free apply.
void add_operator_blocks(Matrix& a, const BlockOperator& op, const Matrix& w, const std::vector<std::size_t>& rows,
                         const std::vector<std::size_t>& cols, Eigen::Index n) {
  for (Eigen::Index c = 0; c < n; ++c) {
    const Vector col = op.is_identity() ? Vector(Vector::Unit(n, c)) : op.apply(Vector::Unit(n, c));
    for (Eigen::Index r = 0; r < n; ++r) {
      const Scalar v = col(r);
      if (v == Scalar(0.0)) continue;
      for (std::size_t bi = 0; bi < rows.size(); ++bi) {
        for (std::size_t bj = 0; bj < cols.size(); ++bj) {
          a(static_cast<Eigen::Index>(bi) * n + r, static_cast<Eigen::Index>(bj) * n + c) +=
              w(static_cast<Eigen::Index>(rows[bi]), static_cast<Eigen::Index>(cols[bj])) * v;
        }
      }
    }
  }
}

class CpRun {
 public:
  CpRun(const SpinHamiltonian& h, const Blocking& blocking, const CpAlsOptions& options)
      : hb_(regroup(h, blocking)), options_(options), ctx_(hb_, &flops_) {
    if (options.rank == 0) throw DimensionError("CP ALS: rank must be positive");
  }

  CpAlsResult simultaneous() {
    x_ = options_.init == CpInit::spectral
             ? spectral_init(hb_, options_.rank, options_.spectral, options_.seed, options_.tol)
             : random_cp(hb_.blocking, options_.rank, options_.seed);
    x_ = absorb_weights(x_);
    ctx_.refresh_all(x_);
    double energy = ctx_.energy();
    record(1, 0, 0, energy, false);
    const std::size_t q = x_.modes();
    for (std::size_t sweep = 1; sweep <= options_.sweeps; ++sweep) {
      const double start = energy;
      for (std::size_t i = 0; i < q; ++i) {
        update_all_addends(i);
        ctx_.refresh(x_, i);
        energy = ctx_.energy();
        record(1, sweep, i, energy, false);
      }
      x_ = absorb_weights(normalized(x_));
      ctx_.refresh_all(x_);
      result_.sweeps_run = sweep;
      if (std::abs(start - energy) < options_.tol.convergence) {
        result_.converged = true;
        break;
      }
    }
    result_.stage_energies = {energy};
    return finish(energy);
  }

  CpAlsResult greedy() {
    const std::size_t q = hb_.blocking.blocks();
    double energy = 0.0;
    x_ = BlockedCp{hb_.blocking, {}, {}};
    for (std::size_t stage = 1; stage <= options_.rank; ++stage) {
      std::size_t attempt = 0;
      start_addend(stage, attempt);
      energy = ctx_.energy();
      if (stage == 1) record(1, 0, 0, energy, false);
      for (std::size_t sweep = 1; sweep <= options_.sweeps; ++sweep) {
        const double start = energy;
        bool restarted = false;
        for (std::size_t i = 0; i < q; ++i) {
          const bool ok = stage == 1 ? update_rank_one(i) : update_bordered(i);
          if (!ok && attempt < options_.max_restarts) {
            ++attempt;
            ++result_.restarts;
            start_addend(stage, attempt);
            energy = ctx_.energy();
            record(stage, sweep, i, energy, true);
            restarted = true;
            break;
          }
          ctx_.refresh(x_, i);
          energy = ctx_.energy();
          record(stage, sweep, i, energy, false);
        }
        result_.sweeps_run += 1;
        if (restarted) continue;
        if (std::abs(start - energy) < options_.tol.convergence) break;
      }
      result_.stage_energies.push_back(energy);
    }
    result_.converged = true;
    return finish(energy);
  }

 private:
  void record(std::size_t stage, std::size_t sweep, std::size_t position, double energy, bool restart) {
    result_.trace.push_back({stage, sweep, position, energy, flops_.total, restart, clock_.seconds()});
  }

  CpAlsResult finish(double energy) {
    result_.state = normalized(x_);
    result_.energy = energy;
    return std::move(result_);
  }

  // Appends (or replaces) the addend of the given stage with a fresh start.
  void start_addend(std::size_t stage, std::size_t attempt) {
    BlockedCp fresh;
    if (stage == 1 && attempt == 0 && options_.init == CpInit::spectral) {
      fresh = spectral_init(hb_, 1, options_.spectral, options_.seed, options_.tol);
    } else {
      fresh = random_cp(hb_.blocking, 1, greedy_addend_seed(options_.seed, stage, attempt));
    }
    if (x_.rank() == stage) {
      x_.factors.back() = fresh.factors[0];
    } else {
      x_.factors.push_back(fresh.factors[0]);
      x_.weights.push_back(1.0);
    }
    ctx_.refresh_all(x_);
  }

  Eigen::Index dim(std::size_t i) const { return static_cast<Eigen::Index>(hb_.blocking.dim(i)); }

  void update_all_addends(std::size_t i) {
    const Eigen::Index n = dim(i);
    const std::size_t d = x_.rank();
    const Eigen::Index size = static_cast<Eigen::Index>(d) * n;
    std::vector<std::size_t> all(d);
    for (std::size_t l = 0; l < d; ++l) all[l] = l;

    Matrix a = Matrix::Zero(size, size);
    for (std::size_t k = 0; k < hb_.term_count(); ++k) {
      add_operator_blocks(a, hb_.blocks[k][i], hb_.coefficients[k] * ctx_.term_except(k, i), all, all, n);
    }
    count(&flops_, static_cast<std::uint64_t>(hb_.term_count()) * static_cast<std::uint64_t>(size * size));
    const Matrix g = ctx_.gram_except(i);
    Matrix b = Matrix::Zero(size, size);
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(d); ++r) {
      for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(d); ++c) {
        b.block(r * n, c * n, n, n).diagonal().setConstant(g(r, c));
      }
    }
    const auto solved = lowest_pencil_pair(a, b, options_.tol);
    if (solved.projected) ++result_.projected_solves;
    count(&flops_, static_cast<std::uint64_t>(size) * static_cast<std::uint64_t>(size * size));
    for (std::size_t l = 0; l < d; ++l) {
      x_.factors[l][i] = solved.pair.vector.segment(static_cast<Eigen::Index>(l) * n, n);
    }
  }

  bool update_rank_one(std::size_t i) {
    const Eigen::Index n = dim(i);
    const std::vector<std::size_t> only{0};
    Matrix a = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < hb_.term_count(); ++k) {
      add_operator_blocks(a, hb_.blocks[k][i], hb_.coefficients[k] * ctx_.term_except(k, i), only, only, n);
    }
    const double gamma = ctx_.gram_except(i)(0, 0).real();
    if (!(gamma > 0.0)) throw NumericalError("CP ALS: zero norm in the fixed modes");
    const auto eig = hermitian_eig_lowest(a / gamma, 1, options_.tol);
    count(&flops_, static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n * n));
    x_.factors[0][i] = eig.vectors.col(0);
    return true;
  }

  // The newest addend is the unknown; the others are frozen. Returns false
  // when the bordered eigenvector has a vanishing last coordinate.
  bool update_bordered(std::size_t i) {
    const Eigen::Index n = dim(i);
    const std::size_t d = x_.rank();
    const std::size_t fresh = d - 1;
    const std::vector<std::size_t> unknown{fresh};

    Matrix hi = Matrix::Zero(n, n);
    Vector u = Vector::Zero(n);
    Scalar beta = 0.0;
    for (std::size_t k = 0; k < hb_.term_count(); ++k) {
      const auto& op = hb_.blocks[k][i];
      const Matrix w = hb_.coefficients[k] * ctx_.term_except(k, i);
      add_operator_blocks(hi, op, w, unknown, unknown, n);
      for (std::size_t l = 0; l < fresh; ++l) {
        const Vector hy = op.apply(x_.factors[l][i], &flops_);
        u += w(static_cast<Eigen::Index>(fresh), static_cast<Eigen::Index>(l)) * hy;
        for (std::size_t m = 0; m < fresh; ++m) {
          beta += w(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(l)) * x_.factors[m][i].dot(hy);
        }
      }
    }

    const Matrix g = ctx_.gram_except(i);
    Vector v = Vector::Zero(n);
    Scalar rho = 0.0;
    for (std::size_t l = 0; l < fresh; ++l) {
      v += g(static_cast<Eigen::Index>(fresh), static_cast<Eigen::Index>(l)) * x_.factors[l][i];
      for (std::size_t m = 0; m < fresh; ++m) {
        rho += g(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(l)) * x_.factors[m][i].dot(x_.factors[l][i]);
      }
    }
    const double gamma = g(static_cast<Eigen::Index>(fresh), static_cast<Eigen::Index>(fresh)).real();

    const auto solved = solve_bordered(hi, u, beta.real(), gamma, v, rho.real(), options_.tol);
    if (solved.projected) ++result_.projected_solves;
    count(&flops_, static_cast<std::uint64_t>(n + 1) * static_cast<std::uint64_t>((n + 1) * (n + 1)));
    if (!solved.x) return false;
    x_.factors[fresh][i] = *solved.x;
    return true;
  }

  BlockedHamiltonian hb_;
  CpAlsOptions options_;
  FlopCounter flops_;
  Stopwatch clock_;
  CpContractions ctx_;
  BlockedCp x_;
  CpAlsResult result_;
};

}  // namespace

std::uint64_t greedy_addend_seed(std::uint64_t seed, std::size_t stage, std::size_t attempt) {
  return seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(stage) * 64 + attempt + 1));
}

BorderedSolution solve_bordered(const Matrix& h, const Vector& u, double beta, double gamma, const Vector& v,
                                double rho, const Tolerances& tol) {
  const Eigen::Index n = h.rows();
  if (h.cols() != n || u.size() != n || v.size() != n) throw DimensionError("solve_bordered: size mismatch");
  Matrix a(n + 1, n + 1);
  a.topLeftCorner(n, n) = h;
  a.topRightCorner(n, 1) = u;
  a.bottomLeftCorner(1, n) = u.adjoint();
  a(n, n) = beta;
  Matrix b = Matrix::Zero(n + 1, n + 1);
  b.topLeftCorner(n, n).diagonal().setConstant(gamma);
  b.topRightCorner(n, 1) = v;
  b.bottomLeftCorner(1, n) = v.adjoint();
  b(n, n) = rho;

  const auto solved = lowest_pencil_pair(a, b, tol);
  const Vector z = solved.pair.vector / solved.pair.vector.norm();
  const Scalar last = z(n);
  BorderedSolution out;
  out.projected = solved.projected;
  if (std::abs(last) > tol.pinned_coordinate) out.x = Vector(z.head(n) / last);
  return out;
}

CpAlsResult greedy_als(const SpinHamiltonian& h, const Blocking& blocking, const CpAlsOptions& options) {
  return CpRun(h, blocking, options).greedy();
}

CpAlsResult simultaneous_als(const SpinHamiltonian& h, const Blocking& blocking, const CpAlsOptions& options) {
  return CpRun(h, blocking, options).simultaneous();
}

}  // namespace qtn
