#pragma once

#include "qtn/hamiltonian.hpp"

namespace qtn {

struct GroundState {
  double energy = 0.0;
  DenseState state;  // unit norm, phase-normalized
};

/// Smallest eigenpair of the dense materialization.
GroundState ground_state_dense(const SpinHamiltonian& h, const Tolerances& tol = {});

/// (x^H H x) / (x^H x) using the matrix-free apply.
double rayleigh(const SpinHamiltonian& h, const DenseState& x, const Tolerances& tol = {});

}  // namespace qtn
