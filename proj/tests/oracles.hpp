// Brute-force dense vectors of every tensor format, built from textbook
// Kronecker products or explicit sums over bond indices.
#pragma once

#include <random>
#include <vector>

#include "qtn/mixed.hpp"
#include "qtn/parafac.hpp"
#include "qtn/peps.hpp"
#include "test_util.hpp"

namespace qtn::testing {

inline MixedTerm random_term(const Blocking& b, std::size_t offset, std::mt19937_64& g) {
  MixedTerm t{b, offset, {}, random_scalar(g)};
  for (std::size_t i = 0; i < b.blocks(); ++i) t.factors.push_back(random_vector(b.dim(i), g));
  return t;
}

inline PatternedTerm2D random_pattern(const SubblockLattice& lat, int pattern, std::mt19937_64& g) {
  PatternedTerm2D t{lat, pattern, {}, random_scalar(g)};
  for (std::size_t k = 0; k < pattern_pairs(lat, pattern).size(); ++k) {
    t.factors.push_back(random_vector(pow2(2 * lat.r()), g));
  }
  return t;
}

inline BlockedCp random_weighted_cp(const Blocking& b, std::size_t rank, std::mt19937_64& g = rng()) {
  BlockedCp x{b, {}, {}};
  for (std::size_t l = 0; l < rank; ++l) {
    std::vector<Vector> addend;
    for (std::size_t i = 0; i < b.blocks(); ++i) addend.push_back(random_vector(b.dim(i), g));
    x.factors.push_back(std::move(addend));
    x.weights.push_back(random_scalar(g));
  }
  return x;
}

// Textbook Kronecker product of the factors in rotated site order, then
// the basis index is mapped back to physical sites.
inline Vector term_by_kron(const MixedTerm& t) {
  Matrix v = Matrix::Identity(1, 1);
  for (const auto& f : t.factors) v = kron(Matrix(f), v);
  const std::size_t p = t.sites();
  Vector out(static_cast<Eigen::Index>(pow2(p)));
  for (std::size_t idx = 0; idx < pow2(p); ++idx) {
    std::size_t rot = 0;
    for (std::size_t pos = 0; pos < p; ++pos) rot |= ((idx >> ((t.offset + pos) % p)) & 1U) << pos;
    out(static_cast<Eigen::Index>(idx)) = t.weight * v(static_cast<Eigen::Index>(rot), 0);
  }
  return out;
}

inline Vector sum_by_kron(const MixedTermSum& x) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(pow2(x.sites)));
  for (const auto& t : x.terms) out += term_by_kron(t);
  return out;
}

// Kronecker product over superblocks in pattern order, then mapped to
// physical sites.
inline Vector pattern_by_kron(const PatternedTerm2D& t) {
  const auto pairs = pattern_pairs(t.lattice, t.pattern);
  Matrix v = Matrix::Identity(1, 1);
  std::vector<std::size_t> order;  // physical site of each bit of the kron index
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    v = kron(Matrix(t.factors[k]), v);
    for (auto s : t.lattice.subblock_sites(pairs[k].first)) order.push_back(s);
    for (auto s : t.lattice.subblock_sites(pairs[k].second)) order.push_back(s);
  }
  const std::size_t p = t.lattice.sites();
  Vector out(static_cast<Eigen::Index>(pow2(p)));
  for (std::size_t idx = 0; idx < pow2(p); ++idx) {
    std::size_t k = 0;
    for (std::size_t bit = 0; bit < order.size(); ++bit) k |= ((idx >> order[bit]) & 1U) << bit;
    out(static_cast<Eigen::Index>(idx)) = t.weight * v(static_cast<Eigen::Index>(k), 0);
  }
  return out;
}

// Component-by-component expansion of a blocked CP state.
inline Vector cp_by_components(const BlockedCp& x) {
  const std::size_t n = pow2(x.blocking.sites());
  Vector v = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t idx = 0; idx < n; ++idx) {
    for (std::size_t l = 0; l < x.rank(); ++l) {
      Scalar prod = x.weights[l];
      for (std::size_t i = 0; i < x.modes(); ++i) {
        const std::size_t j = (idx >> x.blocking.start(i)) & (x.blocking.dim(i) - 1);
        prod *= x.factors[l][i](static_cast<Eigen::Index>(j));
      }
      v(static_cast<Eigen::Index>(idx)) += prod;
    }
  }
  return v;
}

// One PEPS component by summing over every bond configuration.
inline Scalar component_by_bonds(const PepsState& x, std::size_t index) {
  const std::size_t R = x.rows;
  const std::size_t C = x.cols;
  // Interior bonds: vertical (r, c)-(r+1, c) then horizontal (r, c)-(r, c+1).
  std::vector<std::size_t> dims;
  for (std::size_t r = 0; r + 1 < R; ++r) {
    for (std::size_t c = 0; c < C; ++c) dims.push_back(x.site(r, c).dim(2));
  }
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c + 1 < C; ++c) dims.push_back(x.site(r, c).dim(4));
  }
  const std::size_t nv = (R - 1) * C;
  std::size_t configs = 1;
  for (auto d : dims) configs *= d;
  Scalar total = 0.0;
  std::vector<std::size_t> k(dims.size());
  for (std::size_t n = 0; n < configs; ++n) {
    std::size_t rest = n;
    for (std::size_t b = 0; b < dims.size(); ++b) {
      k[b] = rest % dims[b];
      rest /= dims[b];
    }
    Scalar prod = 1.0;
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t i = (index >> (r * C + c)) & 1U;
        const std::size_t u = r > 0 ? k[(r - 1) * C + c] : 0;
        const std::size_t d = r + 1 < R ? k[r * C + c] : 0;
        const std::size_t l = c > 0 ? k[nv + r * (C - 1) + c - 1] : 0;
        const std::size_t rt = c + 1 < C ? k[nv + r * (C - 1) + c] : 0;
        prod *= x.site(r, c).at({i, u, d, l, rt});
      }
    }
    total += prod;
  }
  return total;
}

// Dense PEPS vector row by row: each row tensor T[up, (bits, down)] is a
// brute-force sum over its horizontal bonds, and rows are chained by
// ordinary matrix products over the vertical bonds.
inline Vector peps_by_rows(const PepsState& x) {
  const std::size_t C = x.cols;
  Matrix v = Matrix::Ones(1, 1);  // rows: bits of the rows so far, cols: down bonds
  for (std::size_t r = 0; r < x.rows; ++r) {
    std::vector<std::size_t> up(C), down(C), horiz(C > 0 ? C - 1 : 0);
    std::size_t nu = 1, nd = 1, nh = 1;
    for (std::size_t c = 0; c < C; ++c) {
      up[c] = x.site(r, c).dim(1);
      down[c] = x.site(r, c).dim(2);
      nu *= up[c];
      nd *= down[c];
      if (c + 1 < C) {
        horiz[c] = x.site(r, c).dim(4);
        nh *= horiz[c];
      }
    }
    const std::size_t ni = pow2(C);
    Matrix t = Matrix::Zero(static_cast<Eigen::Index>(nu), static_cast<Eigen::Index>(ni * nd));
    std::vector<std::size_t> uc(C), dc(C), hc(horiz.size());
    auto decode = [](std::size_t n, const std::vector<std::size_t>& dims, std::vector<std::size_t>& out) {
      for (std::size_t k = 0; k < dims.size(); ++k) {
        out[k] = n % dims[k];
        n /= dims[k];
      }
    };
    for (std::size_t u = 0; u < nu; ++u) {
      decode(u, up, uc);
      for (std::size_t d = 0; d < nd; ++d) {
        decode(d, down, dc);
        for (std::size_t i = 0; i < ni; ++i) {
          Scalar sum = 0.0;
          for (std::size_t h = 0; h < nh; ++h) {
            decode(h, horiz, hc);
            Scalar prod = 1.0;
            for (std::size_t c = 0; c < C; ++c) {
              const std::size_t l = c > 0 ? hc[c - 1] : 0;
              const std::size_t rt = c + 1 < C ? hc[c] : 0;
              prod *= x.site(r, c).at({(i >> c) & 1U, uc[c], dc[c], l, rt});
            }
            sum += prod;
          }
          t(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(i + ni * d)) = sum;
        }
      }
    }
    const Matrix w = v * t;
    Matrix next(w.rows() * static_cast<Eigen::Index>(ni), static_cast<Eigen::Index>(nd));
    for (Eigen::Index old = 0; old < w.rows(); ++old) {
      for (std::size_t i = 0; i < ni; ++i) {
        for (std::size_t d = 0; d < nd; ++d) {
          next(old + w.rows() * static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) =
              w(old, static_cast<Eigen::Index>(i + ni * d));
        }
      }
    }
    v = next;
  }
  return v.col(0);
}

inline Vector peps_by_bonds(const PepsState& x) {
  const std::size_t n = pow2(x.rows * x.cols);
  Vector v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = component_by_bonds(x, i);
  return v;
}

}  // namespace qtn::testing
