#pragma once

#include <optional>
#include <vector>

#include "qtn/mps.hpp"

namespace qtn {

struct MpsAlsOptions {
  std::size_t bond_dim = 4;
  Boundary boundary = Boundary::open;
  std::size_t sweeps = 10;
  std::uint64_t seed = 1;
  std::optional<Blocking> blocking;  // all-ones when unset
  Tolerances tol;
};

struct MpsAlsResult {
  std::vector<TraceEntry> trace;
  MpsState state;
  double energy = 0.0;
  std::size_t sweeps_run = 0;
  bool converged = false;
};

/// Single-site ALS minimization of the Rayleigh quotient.
///
/// A sweep updates sites 0..q-2 moving right, then q-1..1 moving left; after
/// each update an SVD moves the orthogonality center to the next site. For
/// open chains the gauge keeps the denominator at the identity so every
/// update is a standard eigenproblem; periodic chains build the denominator
/// from transfer matrices and solve the pencil. Stops after `sweeps` sweeps
/// or once the energy changed by less than tol.convergence in two
/// consecutive sweeps.
MpsAlsResult als_ground_state(const SpinHamiltonian& h, const MpsAlsOptions& options);

}  // namespace qtn
