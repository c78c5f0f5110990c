#include <gtest/gtest.h>

#include <algorithm>

#include <Eigen/Eigenvalues>

#include "qtn/oracle.hpp"
#include "qtn/parafac_als.hpp"
#include "oracles.hpp"

using namespace qtn;
using qtn::testing::all_blockings;
using qtn::testing::random_scalar;
using qtn::testing::random_vector;
using qtn::testing::rng;
using qtn::testing::cp_by_components;
using qtn::testing::random_weighted_cp;

namespace {

bool nonincreasing(const std::vector<TraceEntry>& trace, double tol) {
  for (std::size_t k = 1; k < trace.size(); ++k) {
    if (trace[k].energy > trace[k - 1].energy + tol) return false;
  }
  return true;
}

}  // namespace

TEST(CpDense, OnesAndKnownSum) {
  const Blocking b({1, 2});
  BlockedCp ones{b, {{Vector::Ones(2), Vector::Ones(4)}}, {1.0}};
  EXPECT_TRUE(to_dense(ones).coefficients.isApprox(Vector::Ones(8)));

  // e_0 (x) e_0 + 2 e_1 (x) e_3 -> entries 0 and 1 + 2*3 = 7.
  BlockedCp two{b, {{Vector::Unit(2, 0), Vector::Unit(4, 0)}, {Vector::Unit(2, 1), Vector::Unit(4, 3)}}, {1.0, 2.0}};
  Vector expected = Vector::Zero(8);
  expected(0) = 1.0;
  expected(7) = 2.0;
  EXPECT_EQ(to_dense(two).coefficients, expected);
}

TEST(CpDense, RandomMatchesComponentExpansion) {
  const auto x = random_weighted_cp(Blocking({2, 1, 3}), 3);
  EXPECT_LE((to_dense(x).coefficients - cp_by_components(x)).norm(), 1e-13 * cp_by_components(x).norm());
  BlockedCp bad = x;
  bad.factors[1][2] = Vector::Ones(3);
  EXPECT_THROW(to_dense(bad), DimensionError);
}

TEST(CpInner, OrthogonalAndPositive) {
  const Blocking b({2, 2});
  BlockedCp y{b, {{Vector::Unit(4, 0), Vector::Ones(4)}}, {1.0}};
  BlockedCp x{b, {{Vector::Unit(4, 1), Vector::Ones(4)}}, {1.0}};
  EXPECT_EQ(inner(y, x), Scalar(0.0));
  const auto r = random_weighted_cp(b, 3);
  const Scalar self = inner(r, r);
  EXPECT_GT(self.real(), 0.0);
  EXPECT_LE(std::abs(self.imag()), 1e-12 * self.real());
  EXPECT_THROW(inner(r, random_weighted_cp(Blocking({1, 3}), 1)), DimensionError);
}

TEST(CpInner, MatchesDenseWithCostBound) {
  const Blocking b({5, 5});
  const auto y = random_weighted_cp(b, 4);
  const auto x = random_weighted_cp(b, 4);
  FlopCounter flops;
  const Scalar got = inner(y, x, &flops);
  const Scalar want = to_dense(y).coefficients.dot(to_dense(x).coefficients);
  EXPECT_LE(std::abs(got - want), 1e-12 * std::max(1.0, std::abs(want)));
  const double bound = 2.0 * (2.0 * 32 + 1);  // q (2 2^{p/q} + 1) per addend pair
  EXPECT_EQ(flops.steps, 16U);
  EXPECT_LE(static_cast<double>(flops.max_step), bound);
}

TEST(CpExpectation, IdentityHermitianAndDense) {
  const Blocking b({3, 3});
  const auto y = random_weighted_cp(b, 2);
  const auto x = random_weighted_cp(b, 2);
  SpinHamiltonian id(6, {});
  id.add_term(1.0, {});
  EXPECT_LE(std::abs(expectation_form(regroup(id, b), y, x) - inner(y, x)), 1e-12 * std::abs(inner(y, x)));

  const auto h = build_ising(6, 1.0, Boundary::open);
  const auto hb = regroup(h, b);
  const Scalar got = expectation_form(hb, y, x);
  const Scalar want = to_dense(y).coefficients.dot(materialize_dense(h) * to_dense(x).coefficients);
  EXPECT_LE(std::abs(got - want), 1e-11 * std::max(1.0, std::abs(want)));
  const Scalar self = expectation_form(hb, x, x);
  EXPECT_LE(std::abs(self.imag()), 1e-11 * std::max(1.0, std::abs(self)));
}

TEST(CpExpectation, CostBound) {
  const Blocking b({5, 5});
  const auto h = regroup(build_ising(10, 1.0, Boundary::open), b);
  const auto x = random_weighted_cp(b, 3);
  FlopCounter flops;
  expectation_form(h, x, x, &flops);
  const double m = static_cast<double>(h.term_count());
  const double bound = 2.0 * m * 9.0 * 2.0 * (3.0 * 32 + 1);  // 2 M D^2 q (3 2^{p/q} + 1)
  EXPECT_LE(static_cast<double>(flops.total), bound);
  EXPECT_GT(flops.total, 0U);
}

TEST(CpContractions, AllBlockingsAgreeWithDense) {
  for (std::size_t p = 2; p <= 8; ++p) {
    const auto h = build_heisenberg_xy(p, 1.0, 0.6, 0.4, Boundary::periodic);
    const Matrix dense = materialize_dense(h);
    for (const auto& b : all_blockings(p)) {
      const std::size_t d = 1 + (p + b.blocks()) % 4;
      const auto y = random_weighted_cp(b, d);
      const auto x = random_weighted_cp(b, 5 - d);
      const Vector yv = to_dense(y).coefficients;
      const Vector xv = to_dense(x).coefficients;
      const Scalar ip = yv.dot(xv);
      const Scalar ef = yv.dot(dense * xv);
      ASSERT_LE(std::abs(inner(y, x) - ip), 1e-11 * std::max(1.0, std::abs(ip))) << b.str();
      ASSERT_LE(std::abs(expectation_form(regroup(h, b), y, x) - ef), 1e-11 * std::max(1.0, std::abs(ef))) << b.str();
    }
  }
}

TEST(CpApply, DenseAndRank) {
  const Blocking b({2, 4});
  const auto x = random_weighted_cp(b, 2);
  SpinHamiltonian id(6, {});
  id.add_term(1.0, {});
  const auto same = apply_hamiltonian(regroup(id, b), x);
  EXPECT_LE((to_dense(same).coefficients - to_dense(x).coefficients).norm(), 1e-13 * to_dense(x).coefficients.norm());

  const auto h = build_heisenberg_xy(6, 0.7, 1.1, 0.5, Boundary::open);
  const auto hx = apply_hamiltonian(regroup(h, b), x);
  EXPECT_EQ(hx.rank(), h.term_count() * 2);
  const Vector want = materialize_dense(h) * to_dense(x).coefficients;
  EXPECT_LE((to_dense(hx).coefficients - want).norm(), 1e-12 * want.norm());
}

TEST(CpNormalize, UnitFactorsSameVector) {
  auto x = random_weighted_cp(Blocking({3, 2, 1}), 3);
  x.factors[2][1].setZero();
  const auto n = normalized(x);
  for (std::size_t l = 0; l < n.rank(); ++l) {
    for (const auto& f : n.factors[l]) EXPECT_NEAR(f.norm(), 1.0, 1e-14);
  }
  EXPECT_EQ(n.weights[2], Scalar(0.0));
  EXPECT_LE((to_dense(n).coefficients - to_dense(x).coefficients).norm(), 1e-13 * to_dense(x).coefficients.norm());
  const auto a = absorb_weights(n);
  EXPECT_LE((to_dense(a).coefficients - to_dense(x).coefficients).norm(), 1e-13 * to_dense(x).coefficients.norm());
}

TEST(CpMps, DiagonalEmbeddingRoundTrip) {
  for (const auto& widths : std::vector<std::vector<std::size_t>>{{6}, {2, 4}, {1, 2, 1, 2}}) {
    const auto x = random_weighted_cp(Blocking(widths), 3);
    const auto m = to_mps(x);
    m.validate();
    EXPECT_LE((to_dense(m).coefficients - cp_by_components(x)).norm(), 1e-12 * cp_by_components(x).norm());
  }
}

TEST(SpectralInit, BlockGroundStatesAndRank) {
  const Blocking b({5, 5});
  const auto h = build_ising(10, 1.0, Boundary::open);
  const auto hb = regroup(h, b);
  const auto one = spectral_init(hb, 1);
  const auto local = build_ising(5, 1.0, Boundary::open);
  const Vector gs = ground_state_dense(local).state.coefficients;
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(std::abs(one.factors[0][i].dot(gs)), 1.0, 1e-10);

  const auto four = spectral_init(hb, 4);
  for (std::size_t i = 0; i < 2; ++i) {
    Matrix slab(32, 4);
    for (Eigen::Index l = 0; l < 4; ++l) slab.col(l) = four.factors[static_cast<std::size_t>(l)][i];
    EXPECT_LE((slab.adjoint() * slab - Matrix::Identity(4, 4)).norm(), 1e-10);
  }
  const auto padded = spectral_init(regroup(h, Blocking({1, 9})), 3);
  EXPECT_NEAR(padded.factors[2][0].norm(), 1.0, 1e-14);

  // The literal variant adds every term's block factor without weights.
  const Matrix all = spectral_operator(hb, 0, SpectralVariant::all_factors);
  const Matrix weighted = spectral_operator(hb, 0, SpectralVariant::local_weighted);
  EXPECT_LE((weighted - materialize_dense(local)).norm(), 1e-13);
  EXPECT_GT((all - weighted).norm(), 1.0);
}

TEST(SpectralInit, BeatsMedianRandomStart) {
  const Blocking b({5, 5});
  const auto hb = regroup(build_ising(10, 1.0, Boundary::open), b);
  const auto energy_of = [&](const BlockedCp& x) {
    return (expectation_form(hb, x, x) / inner(x, x)).real();
  };
  std::vector<double> random;
  for (std::uint64_t s = 1; s <= 20; ++s) random.push_back(energy_of(random_cp(b, 2, s)));
  std::nth_element(random.begin(), random.begin() + 10, random.end());
  EXPECT_LE(energy_of(spectral_init(hb, 2)), random[10]);
}

TEST(GreedyAls, ZeroFieldRankOne) {
  for (const auto& widths : std::vector<std::vector<std::size_t>>{{1, 1, 1, 1, 1, 1}, {2, 3, 1}, {6}}) {
    CpAlsOptions opt;
    opt.rank = 1;
    opt.sweeps = 20;
    const auto r = greedy_als(build_ising(6, 0.0, Boundary::open), Blocking(widths), opt);
    EXPECT_NEAR(r.energy, -5.0, 1e-10);
  }
}

TEST(GreedyAls, TenSpinsErrorNonincreasingInRank) {
  const auto h = build_ising(10, 1.0, Boundary::open);
  const double e0 = ground_state_dense(h).energy;
  CpAlsOptions opt;
  opt.rank = 4;
  opt.sweeps = 50;
  const auto r = greedy_als(h, Blocking({5, 5}), opt);
  ASSERT_EQ(r.stage_energies.size(), 4U);
  for (std::size_t d = 0; d < 4; ++d) {
    EXPECT_GE(r.stage_energies[d], e0 - 1e-10);
    if (d > 0) {
      EXPECT_LE(r.stage_energies[d], r.stage_energies[d - 1] + 1e-12);
    }
  }
  // Each stage keeps earlier addends, so the final error stays well above
  // what the same rank reaches when all addends move together.
  CpAlsOptions sim = opt;
  sim.init = CpInit::spectral;
  EXPECT_LT(simultaneous_als(h, Blocking({5, 5}), sim).energy, r.energy);
  EXPECT_NEAR(rayleigh(h, to_dense(r.state)), r.energy, 1e-10);
  for (std::size_t k = 1; k < r.trace.size(); ++k) {
    if (r.trace[k].stage == r.trace[k - 1].stage && !r.trace[k].restart) {
      EXPECT_LE(r.trace[k].energy, r.trace[k - 1].energy + 1e-10);
    }
  }
}

TEST(SimultaneousAls, FullSpaceInOneUpdate) {
  const auto h = build_ising(8, 1.0, Boundary::open);
  const double e0 = ground_state_dense(h).energy;
  CpAlsOptions opt;
  opt.rank = 1;
  opt.sweeps = 1;
  const auto r = simultaneous_als(h, Blocking({8}), opt);
  ASSERT_GE(r.trace.size(), 2U);
  EXPECT_NEAR(r.trace[1].energy, e0, 1e-10);
}

TEST(SimultaneousAls, MonotoneSelfConsistentAndDeterministic) {
  const auto h = build_heisenberg_xy(8, 1.0, 0.5, 0.8, Boundary::open);
  const double e0 = ground_state_dense(h).energy;
  for (const auto& widths : std::vector<std::vector<std::size_t>>{{4, 4}, {3, 3, 2}, {2, 2, 2, 2}}) {
    CpAlsOptions opt;
    opt.rank = 3;
    opt.sweeps = 15;
    opt.seed = 7;
    const auto r = simultaneous_als(h, Blocking(widths), opt);
    EXPECT_TRUE(nonincreasing(r.trace, 1e-10));
    EXPECT_GE(r.energy, e0 - 1e-10);
    EXPECT_NEAR(rayleigh(h, to_dense(r.state)), r.energy, 1e-10);
    const auto again = simultaneous_als(h, Blocking(widths), opt);
    EXPECT_EQ(again.energy, r.energy);
  }
}

TEST(SimultaneousAls, LargerRankHelpsOnTenSpins) {
  const auto h = build_ising(10, 1.0, Boundary::open);
  const double e0 = ground_state_dense(h).energy;
  CpAlsOptions opt;
  opt.sweeps = 50;
  opt.init = CpInit::spectral;
  double previous = 1e300;
  for (std::size_t d = 1; d <= 4; ++d) {
    opt.rank = d;
    const double err = simultaneous_als(h, Blocking({5, 5}), opt).energy - e0;
    EXPECT_GE(err, -1e-10);
    EXPECT_LE(err, previous + 1e-12);
    previous = err;
  }
  EXPECT_LE(previous, 1e-3 * std::abs(e0));
}
