#include "qtn/contract_check.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "qtn/mixed.hpp"
#include "qtn/mps.hpp"
#include "qtn/parafac.hpp"
#include "qtn/peps.hpp"

namespace qtn {

namespace {

constexpr double max_cost_ratio = 4.0;
constexpr double tolerance = 1e-11;

Blocking random_blocking(std::size_t p, std::size_t max_width, std::mt19937_64& g) {
  std::vector<std::size_t> widths;
  std::size_t left = p;
  while (left > 0) {
    std::uniform_int_distribution<std::size_t> w(1, std::min(left, max_width));
    widths.push_back(w(g));
    left -= widths.back();
  }
  return Blocking(widths);
}

std::size_t widest(const Blocking& b) { return *std::max_element(b.widths.begin(), b.widths.end()); }

double pow_d(double base, std::size_t e) { return std::pow(base, static_cast<double>(e)); }

class Tally {
 public:
  Tally(std::string kernel, double tolerance, std::string bound)
      : check_{std::move(kernel), 0, 0.0, tolerance, 0.0, std::move(bound), true} {}

  void add(Scalar value, Scalar dense, double measured_cost, double bound_cost) {
    ++check_.instances;
    const double err = std::abs(value - dense) / std::max(1.0, std::abs(dense));
    check_.max_rel_error = std::max(check_.max_rel_error, err);
    if (!(err <= check_.tolerance)) check_.passed = false;
    if (bound_cost > 0.0) {
      const double ratio = measured_cost / bound_cost;
      check_.max_cost_ratio = std::max(check_.max_cost_ratio, ratio);
      if (ratio > max_cost_ratio) check_.passed = false;
    }
  }

  KernelCheck result() const { return check_; }

 private:
  KernelCheck check_;
};

Scalar dense_dot(const DenseState& bra, const DenseState& ket) { return bra.coefficients.dot(ket.coefficients); }

KernelCheck check_mps(Boundary boundary, std::size_t instances, std::mt19937_64& g) {
  const bool open = boundary == Boundary::open;
  Tally t(open ? "mps-open" : "mps-periodic", tolerance, open ? "total <= 4 D^3 p" : "total <= 4 D^5 p");
  std::uniform_int_distribution<std::size_t> sites(2, 10), bond(1, 4);
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t p = sites(g);
    const std::size_t d = bond(g);
    const auto x = random_mps(p, d, boundary, Blocking::ones(p), g());
    const auto y = random_mps(p, d, boundary, Blocking::ones(p), g());
    FlopCounter flops;
    const Scalar v = inner(y, x, &flops);
    const double bound = 4.0 * pow_d(static_cast<double>(d), open ? 3 : 5) * static_cast<double>(p);
    t.add(v, dense_dot(to_dense(y), to_dense(x)), static_cast<double>(flops.total), bound);
  }
  return t.result();
}

KernelCheck check_parafac(std::size_t instances, std::mt19937_64& g) {
  Tally t("parafac-inner", tolerance, "total <= R_y R_x sum_i (2 * 2^t_i + 1)");
  std::uniform_int_distribution<std::size_t> sites(2, 10), rank(1, 4);
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t p = sites(g);
    const Blocking b = random_blocking(p, 5, g);
    const std::size_t rx = rank(g), ry = rank(g);
    const auto x = random_cp(b, rx, g());
    const auto y = random_cp(b, ry, g());
    FlopCounter flops;
    const Scalar v = inner(y, x, &flops);
    double per_pair = 0.0;
    for (auto w : b.widths) per_pair += 2.0 * pow_d(2.0, w) + 1.0;
    t.add(v, dense_dot(to_dense(y), to_dense(x)), static_cast<double>(flops.total),
          static_cast<double>(rx * ry) * per_pair);
  }
  return t.result();
}

KernelCheck check_mixed(bool periodic, std::size_t instances, std::mt19937_64& g) {
  Tally t(periodic ? "mixed-pbc" : "mixed-obc", tolerance,
          periodic ? "total <= 2^(3r/2) (k + m)" : "total <= 2^r (k + m)");
  std::uniform_int_distribution<std::size_t> sites(2, 10);
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t p = sites(g);
    const Blocking a = random_blocking(p, 5, g);
    const Blocking b = random_blocking(p, 5, g);
    std::uniform_int_distribution<std::size_t> shift(0, p - 1);
    const auto x = random_mixed_term(a, periodic ? shift(g) : 0, g());
    const auto y = random_mixed_term(b, periodic ? shift(g) : 0, g());
    FlopCounter flops;
    const Scalar v = periodic ? inner_mixed_pbc(y, x, &flops) : inner_mixed_obc(y, x, &flops);
    const std::size_t r = std::max(widest(a), widest(b));
    const double blocks = static_cast<double>(a.blocks() + b.blocks());
    const double bound = (periodic ? std::pow(2.0, 1.5 * static_cast<double>(r)) : pow_d(2.0, r)) * blocks;
    t.add(v, dense_dot(to_dense(y), to_dense(x)), static_cast<double>(flops.total), bound);
  }
  return t.result();
}

KernelCheck check_block_mps_mixed(std::size_t instances, std::mt19937_64& g) {
  Tally t("block-mps-mixed", tolerance, "total <= p 2^r D^3, r the widest block");
  std::uniform_int_distribution<std::size_t> sites(2, 10), bond(1, 4);
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t p = sites(g);
    const Blocking a = random_blocking(p, 3, g);
    const Blocking b = random_blocking(p, 3, g);
    const std::size_t da = bond(g), db = bond(g);
    const auto x = random_mps(p, da, Boundary::open, a, g());
    const auto y = random_mps(p, db, Boundary::open, b, g());
    FlopCounter flops;
    const Scalar v = inner_block_mps_mixed(y, x, &flops);
    const double d = static_cast<double>(std::max(da, db));
    const double bound = static_cast<double>(p) * pow_d(2.0, std::max(widest(a), widest(b))) * d * d * d;
    t.add(v, dense_dot(to_dense(y), to_dense(x)), static_cast<double>(flops.total), bound);
  }
  return t.result();
}

KernelCheck check_pattern_2d(std::size_t instances, std::mt19937_64& g) {
  Tally t("pattern-2d", tolerance, "max_step <= 2^(3r)");
  const std::vector<SubblockLattice> lattices{{2, 2, 1, 1}, {2, 4, 1, 1}, {4, 2, 1, 1}, {2, 2, 1, 2}, {2, 2, 2, 1}};
  std::uniform_int_distribution<std::size_t> pick(0, lattices.size() - 1);
  std::uniform_int_distribution<int> pattern(1, 4);
  for (std::size_t n = 0; n < instances; ++n) {
    const auto& lat = lattices[pick(g)];
    const auto x = random_pattern_term(lat, pattern(g), g());
    const auto y = random_pattern_term(lat, pattern(g), g());
    FlopCounter flops;
    const Scalar v = inner_pattern_2d(y, x, &flops);
    t.add(v, dense_dot(to_dense(y), to_dense(x)), static_cast<double>(flops.max_step), pow_d(2.0, 3 * lat.r()));
  }
  return t.result();
}

KernelCheck check_peps_lossless(std::size_t instances, std::mt19937_64& g) {
  Tally t("peps-lossless", tolerance, "");
  std::uniform_int_distribution<std::size_t> rows(1, 3), cols(1, 4), bond(1, 2);
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t r = rows(g), c = cols(g), d = bond(g);
    const auto x = random_peps(r, c, d, g());
    const auto y = random_peps(r, c, d, g());
    // A cut of (D^2)^rows never truncates.
    std::size_t cut = 1;
    for (std::size_t i = 0; i < r; ++i) cut *= d * d;
    const Scalar v = inner_peps(y, x, cut);
    t.add(v, dense_dot(to_dense(y), to_dense(x)), 0.0, 0.0);
  }
  return t.result();
}

}  // namespace

std::vector<KernelCheck> run_contract_check(std::size_t instances, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::vector<KernelCheck> out;
  out.push_back(check_mps(Boundary::open, instances, g));
  out.push_back(check_mps(Boundary::periodic, instances, g));
  out.push_back(check_parafac(instances, g));
  out.push_back(check_mixed(false, instances, g));
  out.push_back(check_mixed(true, instances, g));
  out.push_back(check_block_mps_mixed(instances, g));
  out.push_back(check_pattern_2d(instances, g));
  out.push_back(check_peps_lossless(instances, g));
  return out;
}

}  // namespace qtn
