#include <gtest/gtest.h>

#include "qtn/mps_als.hpp"
#include "qtn/oracle.hpp"

using namespace qtn;

namespace {

void expect_nonincreasing(const std::vector<TraceEntry>& trace, double tol) {
  for (std::size_t k = 1; k < trace.size(); ++k) {
    EXPECT_LE(trace[k].energy, trace[k - 1].energy + tol) << "step " << k;
  }
}

}  // namespace

TEST(MpsAls, ExactCapableBondDimensionReachesGroundState) {
  const auto h = build_ising(8, 1.0, Boundary::open);
  const double e0 = ground_state_dense(h).energy;
  MpsAlsOptions opt;
  opt.bond_dim = 16;
  opt.sweeps = 10;
  const auto r = als_ground_state(h, opt);
  EXPECT_LE(std::abs(r.energy - e0), 1e-8);
  EXPECT_LE(r.sweeps_run, 10U);
  expect_nonincreasing(r.trace, 1e-10);
  EXPECT_NEAR(rayleigh(h, to_dense(r.state)), r.energy, 1e-10);
  EXPECT_NEAR(inner(r.state, r.state).real(), 1.0, 1e-8);
}

TEST(MpsAls, ProductStateSufficesWithoutField) {
  for (std::size_t p : {3, 6}) {
    MpsAlsOptions opt;
    opt.bond_dim = 1;
    opt.sweeps = 5;
    const auto r = als_ground_state(build_ising(p, 0.0, Boundary::open), opt);
    EXPECT_NEAR(r.energy, -static_cast<double>(p - 1), 1e-10);
  }
}

TEST(MpsAls, PeriodicChainUsesPencil) {
  const auto h = build_ising(6, 1.0, Boundary::periodic);
  const double e0 = ground_state_dense(h).energy;
  MpsAlsOptions opt;
  opt.bond_dim = 4;
  opt.boundary = Boundary::periodic;
  opt.sweeps = 6;
  const auto r = als_ground_state(h, opt);
  expect_nonincreasing(r.trace, 1e-10);
  EXPECT_GE(r.energy, e0 - 1e-10);
  EXPECT_LE(r.energy - e0, 1e-3 * std::abs(e0));
  const auto dense = to_dense(r.state);
  EXPECT_NEAR(rayleigh(h, dense), r.energy, 1e-9);
}

TEST(MpsAls, BlockedSitesAndHeisenberg) {
  const auto h = build_heisenberg_xy(6, 1.0, 0.5, 0.3, Boundary::open);
  const double e0 = ground_state_dense(h).energy;
  MpsAlsOptions opt;
  opt.bond_dim = 8;
  opt.blocking = Blocking({2, 2, 2});
  opt.sweeps = 8;
  const auto r = als_ground_state(h, opt);
  expect_nonincreasing(r.trace, 1e-10);
  EXPECT_NEAR(r.energy, e0, 1e-8);
}

TEST(MpsAls, Deterministic) {
  const auto h = build_ising(6, 0.7, Boundary::open);
  MpsAlsOptions opt;
  opt.bond_dim = 3;
  opt.sweeps = 3;
  const auto a = als_ground_state(h, opt);
  const auto b = als_ground_state(h, opt);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t k = 0; k < a.trace.size(); ++k) EXPECT_EQ(a.trace[k].energy, b.trace[k].energy);
}
