#include <gtest/gtest.h>

#include <cmath>

#include "qtn/peps.hpp"
#include "oracles.hpp"

using namespace qtn;
using qtn::testing::component_by_bonds;

TEST(Peps, DenseMatchesBondSums) {
  const auto x = random_peps(2, 3, 2, 7);
  const auto dense = to_dense(x).coefficients;
  for (std::size_t idx = 0; idx < pow2(6); ++idx) {
    EXPECT_LT(std::abs(dense(static_cast<Eigen::Index>(idx)) - component_by_bonds(x, idx)), 1e-13);
  }
}

TEST(Peps, SingleRowIsAnMps) {
  const auto m = random_mps(6, 3, Boundary::open, Blocking::ones(6), 11);
  const auto x = peps_from_mps(m);
  EXPECT_LT((to_dense(x).coefficients - to_dense(m).coefficients).norm(), 1e-13);
  const auto n = random_mps(6, 2, Boundary::open, Blocking::ones(6), 12);
  const Scalar expected = inner(m, n);
  for (std::size_t cut : {1U, 4U, 9U}) {
    EXPECT_LT(std::abs(inner_peps(x, peps_from_mps(n), cut) - expected), 1e-12 * std::abs(expected));
  }
}

TEST(Peps, BondDimensionOneIsProductState) {
  const auto x = random_peps(2, 2, 1, 5);
  Vector expected = Vector::Ones(1);
  for (const auto& t : x.sites) {
    Vector site(2);
    site << t.at({0, 0, 0, 0, 0}), t.at({1, 0, 0, 0, 0});
    expected = qtn::testing::kron(site, expected);
  }
  EXPECT_LT((to_dense(x).coefficients - expected).norm(), 1e-14);
}

TEST(Peps, LosslessCutMatchesDense) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{3, 3}, {3, 4}, {2, 2}}) {
      const auto x = random_peps(rows, cols, 2, seed);
      const auto y = random_peps(rows, cols, 2, seed + 50);
      const Scalar dense = to_dense(x).coefficients.dot(to_dense(y).coefficients);
      const Scalar v = inner_peps(x, y, 4);
      EXPECT_LT(std::abs(v - dense), 1e-11 * std::max(1.0, std::abs(dense))) << rows << "x" << cols;
    }
  }
}

TEST(Peps, TruncatedCutApproachesDense) {
  const auto x = random_peps(3, 3, 2, 21);
  const auto y = random_peps(3, 3, 2, 22);
  const Scalar dense = to_dense(x).coefficients.dot(to_dense(y).coefficients);
  double prev = std::numeric_limits<double>::infinity();
  int inversions = 0;
  for (std::size_t cut = 1; cut <= 4; ++cut) {
    const double dev = std::abs(inner_peps(x, y, cut) - dense) / std::abs(dense);
    if (dev > prev + 1e-12) ++inversions;
    prev = dev;
  }
  // The truncation carries no accuracy guarantee; only the lossless end is asserted.
  EXPECT_LT(prev, 1e-11);
  RecordProperty("inversions", inversions);
}

TEST(Peps, NormIsRealPositive) {
  const auto x = random_peps(3, 2, 3, 4);
  const Scalar n = inner_peps(x, x, 9);
  EXPECT_GT(n.real(), 0.0);
  EXPECT_LT(std::abs(n.imag()), 1e-12 * n.real());
  EXPECT_NEAR(n.real(), to_dense(x).coefficients.squaredNorm(), 1e-11 * n.real());
}

TEST(Peps, CostScalesWithTenthPower) {
  std::vector<double> logd, logf;
  for (std::size_t d = 1; d <= 3; ++d) {
    const auto x = random_peps(4, 4, d, 31);
    const auto y = random_peps(4, 4, d, 32);
    FlopCounter flops;
    (void)inner_peps(x, y, d, &flops);
    logd.push_back(std::log(static_cast<double>(d)));
    logf.push_back(std::log(static_cast<double>(flops.total)));
  }
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    mx += logd[k] / 3;
    my += logf[k] / 3;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    sxy += (logd[k] - mx) * (logf[k] - my);
    sxx += (logd[k] - mx) * (logd[k] - mx);
  }
  const double slope = sxy / sxx;
  EXPECT_NEAR(slope, 10.0, 1.0);
}

TEST(Peps, RejectsBadInput) {
  const auto x = random_peps(2, 2, 2, 1);
  EXPECT_THROW((void)inner_peps(x, random_peps(2, 3, 2, 1), 4), DimensionError);
  EXPECT_THROW((void)inner_peps(x, x, 0), DimensionError);
  auto broken = x;
  broken.sites[0] = DenseTensor({2, 2, 2, 1, 2});
  EXPECT_THROW(broken.validate(), DimensionError);
  EXPECT_THROW((void)to_dense(random_peps(3, 5, 1, 1)), CapExceeded);
}
