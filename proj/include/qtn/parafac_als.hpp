#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qtn/parafac.hpp"

namespace qtn {

enum class CpInit { random, spectral };

struct CpAlsOptions {
  std::size_t rank = 2;
  /// Simultaneous: total sweeps. Greedy: sweeps per stage.
  std::size_t sweeps = 50;
  std::uint64_t seed = 1;
  CpInit init = CpInit::random;
  SpectralVariant spectral = SpectralVariant::local_weighted;
  /// Greedy only: fresh random starts allowed per stage when the bordered
  /// eigenvector cannot be rescaled.
  std::size_t max_restarts = 3;
  Tolerances tol;
};

struct CpAlsResult {
  std::vector<TraceEntry> trace;
  BlockedCp state;  // normalized form
  double energy = 0.0;
  /// Greedy: energy at the end of each stage d = 1..rank. Simultaneous: the
  /// final energy once.
  std::vector<double> stage_energies;
  std::size_t sweeps_run = 0;
  bool converged = false;
  std::size_t restarts = 0;
  /// Updates whose denominator was singular and solved on its range.
  std::size_t projected_solves = 0;
};

/// Seed for the random start of addend `stage` (1-based) after `attempt`
/// restarts.
std::uint64_t greedy_addend_seed(std::uint64_t seed, std::size_t stage, std::size_t attempt);

struct BorderedSolution {
  std::optional<Vector> x;  // empty when the last coordinate vanishes
  bool projected = false;
};

/// Minimizes z^H [h u; u^H beta] z / z^H [gamma I v; v^H rho] z over
/// z = [x; 1]: solves the (n+1) pencil and rescales the lowest eigenvector
/// so its last coordinate is 1.
BorderedSolution solve_bordered(const Matrix& h, const Vector& u, double beta, double gamma, const Vector& v,
                                double rho, const Tolerances& tol = {});

/// Adds one addend at a time. Stage 1 is rank-one ALS with a standard
/// eigenproblem per mode; at stage d the first d-1 addends are frozen and
/// each mode of the new addend solves the bordered pencil
///   [H_i u; u^H beta] z = mu [gamma I v; v^H rho] z
/// with z rescaled so its last coordinate is 1.
CpAlsResult greedy_als(const SpinHamiltonian& h, const Blocking& blocking, const CpAlsOptions& options);

/// Updates all addends of one mode at once from the D 2^t pencil with block
/// numerator H~(l',l) and denominator (beta(l',l)) (x) I, then normalizes
/// every addend at the end of a sweep.
CpAlsResult simultaneous_als(const SpinHamiltonian& h, const Blocking& blocking, const CpAlsOptions& options);

}  // namespace qtn
