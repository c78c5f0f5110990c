#include <gtest/gtest.h>

#include "qtn/mps.hpp"
#include "qtn/oracle.hpp"
#include "test_util.hpp"

using namespace qtn;
using qtn::testing::mps_by_components;

namespace {

double dense_change(const MpsState& a, const MpsState& b) {
  return (to_dense(a).coefficients - to_dense(b).coefficients).norm();
}

// Bond dimension sum_m (a_1 (x) ... (x) a_p) expansion of a periodic or open
// chain, enumerating every ancilla configuration.
Vector ancilla_expansion(const MpsState& x) {
  const auto bonds = x.bond_dims();
  const std::size_t q = x.sites.size();
  Vector out = Vector::Zero(static_cast<Eigen::Index>(pow2(x.physical_sites())));
  std::vector<std::size_t> m(q, 0);  // m[j] = left bond index of site j
  while (true) {
    for (std::size_t index = 0; index < static_cast<std::size_t>(out.size()); ++index) {
      Scalar v{1.0};
      for (std::size_t j = 0; j < q; ++j) {
        const std::size_t i = (index >> x.blocking.start(j)) & (x.blocking.dim(j) - 1);
        const std::size_t right = m[(j + 1) % q];
        v *= x.sites[j].slices[i](static_cast<Eigen::Index>(m[j]), static_cast<Eigen::Index>(right));
      }
      out(static_cast<Eigen::Index>(index)) += v;
    }
    std::size_t k = 0;
    while (k < q && ++m[k] == bonds[k]) m[k++] = 0;
    if (k == q) break;
  }
  return out;
}

}  // namespace

TEST(Mps, UnitVectorIsBondDimensionOne) {
  for (std::size_t p = 1; p <= 10; ++p) {
    for (std::size_t j = 0; j < pow2(p); j += 1 + pow2(p) / 7) {
      const auto x = from_unit_vector(j, p);
      EXPECT_EQ(to_dense(x).coefficients, DenseState::basis(p, j).coefficients);
      EXPECT_EQ(evaluate_index(x, j), Scalar(1.0));
    }
  }
  const auto blocked = from_unit_vector(37, 7, Blocking({3, 4}));
  EXPECT_EQ(to_dense(blocked).coefficients, DenseState::basis(7, 37).coefficients);
  EXPECT_EQ(evaluate_index(blocked, 36), Scalar(0.0));
}

TEST(Mps, ProductStateEvaluatesToFactorProduct) {
  const auto x = random_mps(5, 1, Boundary::open, Blocking::ones(5), 3);
  for (std::size_t i = 0; i < 32; ++i) {
    Scalar expected{1.0};
    for (std::size_t j = 0; j < 5; ++j) expected *= x.sites[j].slices[(i >> j) & 1U](0, 0);
    EXPECT_LT(std::abs(evaluate_index(x, i) - expected), 1e-15);
  }
}

TEST(Mps, DenseExpansionsAgree) {
  for (auto boundary : {Boundary::open, Boundary::periodic}) {
    for (const auto& b : {Blocking::ones(6), Blocking({2, 1, 3})}) {
      const auto x = random_mps(6, 3, boundary, b, 11);
      const Vector dense = to_dense(x).coefficients;
      EXPECT_LE((dense - mps_by_components(x)).norm(), 1e-13 * dense.norm());
      EXPECT_LE((dense - ancilla_expansion(x)).norm(), 1e-13 * dense.norm());
    }
  }
  Tolerances small;
  small.dense_site_cap = 4;
  EXPECT_THROW(to_dense(random_mps(6, 2, Boundary::open, Blocking::ones(6), 1), small), CapExceeded);
}

TEST(Mps, RandomIsSeededAndClamped) {
  const auto a = random_mps(4, 8, Boundary::open, Blocking::ones(4), 5);
  const auto b = random_mps(4, 8, Boundary::open, Blocking::ones(4), 5);
  EXPECT_EQ(dense_change(a, b), 0.0);
  EXPECT_EQ(a.bond_dims(), (std::vector<std::size_t>{1, 2, 4, 2, 1}));
  const auto c = random_mps(4, 3, Boundary::periodic, Blocking::ones(4), 5);
  EXPECT_EQ(c.bond_dims(), (std::vector<std::size_t>{3, 3, 3, 3, 3}));
}

TEST(Mps, ValidateRejectsBrokenChains) {
  auto x = random_mps(4, 2, Boundary::open, Blocking::ones(4), 1);
  x.sites[2] = SiteTensor::zeros(2, 3, 2);
  EXPECT_THROW(x.validate(), DimensionError);
  EXPECT_THROW(evaluate_index(random_mps(3, 2, Boundary::open, Blocking::ones(3), 1), 8), DimensionError);
}

TEST(Mps, AddIsDenseAdditive) {
  for (auto boundary : {Boundary::open, Boundary::periodic}) {
    for (std::size_t p : {1, 2, 5}) {
      const auto x = random_mps(p, 2, boundary, Blocking::ones(p), 1);
      const auto y = random_mps(p, 2, boundary, Blocking::ones(p), 2);
      const auto s = add(x, y);
      const Vector expected = to_dense(x).coefficients + to_dense(y).coefficients;
      EXPECT_LE((to_dense(s).coefficients - expected).norm(), 1e-13 * expected.norm());
      const auto bx = x.bond_dims(), by = y.bond_dims(), bs = s.bond_dims();
      for (std::size_t j = 1; j < p; ++j) EXPECT_EQ(bs[j], bx[j] + by[j]);
    }
  }
  const auto e = add(from_unit_vector(0, 3), from_unit_vector(1, 3));
  Vector expected = Vector::Zero(8);
  expected(0) = expected(1) = 1.0;
  EXPECT_EQ(to_dense(e).coefficients, expected);
  EXPECT_THROW(add(random_mps(3, 2, Boundary::open, Blocking::ones(3), 1),
                   random_mps(3, 2, Boundary::periodic, Blocking::ones(3), 1)),
               DimensionError);
}

TEST(Mps, NormalizationSweepsGaugeAndPreserve) {
  for (auto boundary : {Boundary::open, Boundary::periodic}) {
    const auto x = random_mps(6, 3, boundary, Blocking::ones(6), 21);
    const double norm2 = to_dense(x).coefficients.squaredNorm();
    for (bool left : {true, false}) {
      const auto n = left ? normalize_left_sweep(x) : normalize_right_sweep(x);
      EXPECT_LE(gauge_residual(n.state, n.status), 1e-12);
      EXPECT_LE(dense_change(n.state, x), 1e-12);
      if (boundary == Boundary::open) {
        EXPECT_NEAR(n.gamma, norm2, 1e-12 * std::max(1.0, norm2));
      }
      EXPECT_EQ(n.status.center, left ? std::optional<std::size_t>(5) : std::optional<std::size_t>(0));
      // Idempotent at the dense level.
      const auto again = left ? normalize_left_sweep(n.state) : normalize_right_sweep(n.state);
      EXPECT_LE(dense_change(again.state, n.state), 1e-12);
    }
  }
}

TEST(Mps, NormalizationDropsZeroSingularValues) {
  // A product state written with bond dimension 2 collapses back to 1.
  auto x = random_mps(4, 1, Boundary::open, Blocking::ones(4), 4);
  auto padded = add(x, scaled(x, 0.0));
  const auto n = normalize_left_sweep(padded);
  EXPECT_EQ(n.state.bond_dims(), (std::vector<std::size_t>{1, 1, 1, 1, 1}));
  EXPECT_LE(dense_change(n.state, x), 1e-12);
}

TEST(Mps, TwoSiteShift) {
  const auto x = normalize_left_sweep(random_mps(4, 2, Boundary::open, Blocking::ones(4), 8)).state;
  for (auto dir : {Direction::left, Direction::right}) {
    const auto full = two_site_shift(x, 1, dir);
    EXPECT_LE(dense_change(full.state, x), 1e-12);
    EXPECT_NEAR(full.discarded_weight, 0.0, 1e-12);
  }
  // Mixed gauge around sites 1-2: site 0 left-gauged, site 3 right-gauged, so
  // the truncation error is exactly the discarded singular value tail.
  const auto rg = normalize_right_sweep(random_mps(4, 4, Boundary::open, Blocking::ones(4), 9)).state;
  const auto x2 = two_site_shift(rg, 0, Direction::right).state;
  const auto cut = two_site_shift(x2, 1, Direction::right, 1);
  EXPECT_EQ(cut.rank, 1U);
  EXPECT_NEAR(dense_change(cut.state, x2), cut.discarded_weight, 1e-12);
  EXPECT_GT(cut.discarded_weight, 0.0);
  const auto right = two_site_shift(x2, 1, Direction::right);
  EXPECT_LE(left_gauge_residual(right.state.sites[1]), 1e-12);
  const auto leftward = two_site_shift(x2, 1, Direction::left);
  EXPECT_LE(right_gauge_residual(leftward.state.sites[2]), 1e-12);

  const auto product = random_mps(4, 1, Boundary::open, Blocking::ones(4), 10);
  const auto lossless = two_site_shift(product, 2, Direction::right, 1);
  EXPECT_LE(dense_change(lossless.state, product), 1e-13);
  EXPECT_THROW(two_site_shift(product, 3, Direction::right), DimensionError);
}

TEST(Mps, InnerMatchesDenseAndCountsFlops) {
  EXPECT_EQ(inner(from_unit_vector(5, 4), from_unit_vector(5, 4)), Scalar(1.0));
  EXPECT_EQ(inner(from_unit_vector(5, 4), from_unit_vector(6, 4)), Scalar(0.0));
  for (auto boundary : {Boundary::open, Boundary::periodic}) {
    const auto x = random_mps(8, 3, boundary, Blocking::ones(8), 30);
    const auto y = random_mps(8, 3, boundary, Blocking::ones(8), 31);
    const Scalar dense = to_dense(x).coefficients.dot(to_dense(y).coefficients);
    EXPECT_LE(std::abs(inner(x, y) - dense), 1e-12 * std::max(1.0, std::abs(dense)));
    EXPECT_LE(std::abs(inner(x, y) - std::conj(inner(y, x))), 1e-13 * std::max(1.0, std::abs(dense)));
  }
  for (std::size_t d : {2, 4, 8}) {
    const std::size_t p = 10;
    FlopCounter open, periodic;
    inner(random_mps(p, d, Boundary::open, Blocking::ones(p), 1), random_mps(p, d, Boundary::open, Blocking::ones(p), 2),
          &open);
    inner(random_mps(p, d, Boundary::periodic, Blocking::ones(p), 1),
          random_mps(p, d, Boundary::periodic, Blocking::ones(p), 2), &periodic);
    EXPECT_LE(open.total, 4 * d * d * d * p);
    EXPECT_LE(periodic.total, 4 * d * d * d * d * d * p);
  }
}

TEST(Mps, ApplyHamiltonian) {
  const auto x = random_mps(4, 2, Boundary::open, Blocking::ones(4), 41);
  SpinHamiltonian id(4, {});
  id.add_term(1.0, {});
  EXPECT_LE(dense_change(apply_hamiltonian(id, x), x), 1e-14);

  for (auto boundary : {Boundary::open, Boundary::periodic}) {
    const auto h = build_ising(4, 1.0, boundary);
    const auto y = random_mps(4, 2, boundary, Blocking({1, 3}), 42);
    const auto hy = apply_hamiltonian(h, y);
    const Vector expected = materialize_dense(h) * to_dense(y).coefficients;
    EXPECT_LE((to_dense(hy).coefficients - expected).norm(), 1e-12 * expected.norm());
  }
  const auto h = build_ising(4, 1.0, Boundary::open);
  const auto full = random_mps(4, 2, Boundary::open, Blocking::ones(4), 43);
  const auto bonds = apply_hamiltonian(h, full).bond_dims();
  EXPECT_EQ(bonds[2], h.term_count() * full.bond_dims()[2]);
}

TEST(Mps, Expectation) {
  EXPECT_NEAR(expectation(build_ising(6, 0.0, Boundary::open), from_unit_vector(0, 6)), 5.0, 1e-14);
  for (auto boundary : {Boundary::open, Boundary::periodic}) {
    const auto h = build_heisenberg_xy(6, 0.8, 0.5, 1.0, boundary);
    const auto x = random_mps(6, 3, boundary, Blocking::ones(6), 50);
    const Vector v = to_dense(x).coefficients;
    const double dense = v.dot(materialize_dense(h) * v).real();
    EXPECT_NEAR(expectation(h, x), dense, 1e-10 * std::max(1.0, std::abs(dense)));
    const auto g = normalize_left_sweep(x).state;
    EXPECT_NEAR(expectation(h, g) / inner(g, g).real(), rayleigh(h, DenseState(6, v)), 1e-10);
  }
}
