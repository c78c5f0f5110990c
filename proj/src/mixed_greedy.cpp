#include <cmath>

#include "qtn/linalg.hpp"
#include "qtn/mixed.hpp"
#include "qtn/parafac_als.hpp"

namespace qtn {

namespace {

class MixedGreedyRun {
 public:
  MixedGreedyRun(const SpinHamiltonian& h, const std::vector<Blocking>& schedule, const MixedGreedyOptions& options)
      : h_(h), options_(options) {
    if (schedule.empty()) throw DimensionError("mixed greedy: empty schedule");
    if (options.rank_per_blocking == 0) throw DimensionError("mixed greedy: rank per blocking must be positive");
    for (const auto& b : schedule) {
      if (b.sites() != h.sites) throw DimensionError("mixed greedy: blocking " + b.str() + " does not cover the chain");
      for (std::size_t r = 0; r < options.rank_per_blocking; ++r) order_.push_back(b);
    }
    result_.state = MixedTermSum{h.sites, Boundary::open, {}};
  }

  MixedGreedyResult run() {
    double energy = 0.0;
    for (std::size_t stage = 1; stage <= order_.size(); ++stage) {
      const Blocking& b = order_[stage - 1];
      hb_ = regroup(h_, b);
      prepare_frozen();
      std::size_t attempt = 0;
      start_addend(b, stage, attempt);
      energy = current_energy();
      if (stage == 1) record(1, 0, 0, energy, false);
      for (std::size_t sweep = 1; sweep <= options_.sweeps; ++sweep) {
        const double start = energy;
        bool restarted = false;
        for (std::size_t i = 0; i < b.blocks(); ++i) {
          const bool ok = update(i);
          if (!ok && attempt < options_.max_restarts) {
            ++attempt;
            ++result_.restarts;
            start_addend(b, stage, attempt);
            energy = current_energy();
            record(stage, sweep, i, energy, true);
            restarted = true;
            break;
          }
          energy = current_energy();
          record(stage, sweep, i, energy, false);
        }
        if (restarted) continue;
        if (std::abs(start - energy) < options_.tol.convergence) break;
      }
      result_.state.terms.push_back(x_);
      result_.stage_energies.push_back(energy);
    }
    result_.energy = energy;
    return std::move(result_);
  }

 private:
  void record(std::size_t stage, std::size_t sweep, std::size_t position, double energy, bool restart) {
    result_.trace.push_back({stage, sweep, position, energy, flops_.total, restart, clock_.seconds()});
  }

  void start_addend(const Blocking& b, std::size_t stage, std::size_t attempt) {
    const auto fresh = random_cp(b, 1, greedy_addend_seed(options_.seed, stage, attempt));
    x_ = MixedTerm{b, 0, fresh.factors[0], 1.0};
  }

  // H applied to every frozen addend, and the frozen-only parts of the
  // numerator and denominator.
  void prepare_frozen() {
    const auto& frozen = result_.state.terms;
    applied_.assign(h_.term_count(), {});
    for (std::size_t k = 0; k < h_.term_count(); ++k) {
      for (const auto& y : frozen) applied_[k].push_back(apply_term(h_.terms[k], y));
    }
    beta_ = 0.0;
    rho_ = 0.0;
    for (const auto& a : frozen) {
      for (const auto& y : frozen) rho_ += inner_mixed_obc(a, y, &flops_).real();
      for (std::size_t k = 0; k < h_.term_count(); ++k) {
        for (const auto& hy : applied_[k]) beta_ += inner_mixed_obc(a, hy, &flops_).real();
      }
    }
  }

  double current_energy() {
    MixedTermSum all = result_.state;
    all.terms.push_back(x_);
    const double num = expectation_mixed(h_, all, &flops_);
    const double den = inner_sum(all, all, &flops_).real();
    if (!(den > 0.0)) throw NumericalError("mixed greedy: state has zero norm");
    return num / den;
  }

  bool update(std::size_t i) {
    const auto n = static_cast<Eigen::Index>(x_.blocking.dim(i));
    Matrix hi = Matrix::Zero(n, n);
    double gamma = 1.0;
    for (std::size_t j = 0; j < x_.blocking.blocks(); ++j) {
      if (j != i) gamma *= x_.factors[j].squaredNorm();
    }
    for (std::size_t k = 0; k < hb_.term_count(); ++k) {
      Scalar w = hb_.coefficients[k];
      for (std::size_t j = 0; j < x_.blocking.blocks(); ++j) {
        if (j != i) w *= x_.factors[j].dot(hb_.blocks[k][j].apply(x_.factors[j], &flops_));
      }
      const auto& op = hb_.blocks[k][i];
      for (Eigen::Index c = 0; c < n; ++c) hi.col(c) += w * op.apply(Vector::Unit(n, c));
    }

    if (result_.state.terms.empty()) {
      if (!(gamma > 0.0)) throw NumericalError("mixed greedy: zero norm in the fixed blocks");
      const auto eig = hermitian_eig_lowest(hi / gamma, 1, options_.tol);
      x_.factors[i] = eig.vectors.col(0);
      return true;
    }

    Vector u = Vector::Zero(n);
    Vector v = Vector::Zero(n);
    for (const auto& per_term : applied_) {
      for (const auto& hy : per_term) u += open_block_contraction(x_, i, hy, &flops_);
    }
    for (const auto& y : result_.state.terms) v += open_block_contraction(x_, i, y, &flops_);
    const auto solved = solve_bordered(hi, u, beta_, gamma, v, rho_, options_.tol);
    if (!solved.x) return false;
    x_.factors[i] = *solved.x;
    return true;
  }

  const SpinHamiltonian& h_;
  MixedGreedyOptions options_;
  std::vector<Blocking> order_;
  BlockedHamiltonian hb_;
  std::vector<std::vector<MixedTerm>> applied_;
  double beta_ = 0.0;
  double rho_ = 0.0;
  MixedTerm x_;
  FlopCounter flops_;
  Stopwatch clock_;
  MixedGreedyResult result_;
};

}  // namespace

MixedGreedyResult ground_state_mixed_greedy(const SpinHamiltonian& h, const std::vector<Blocking>& schedule,
                                            const MixedGreedyOptions& options) {
  return MixedGreedyRun(h, schedule, options).run();
}

}  // namespace qtn
