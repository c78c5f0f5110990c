#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "qtn/hamiltonian.hpp"

namespace qtn {

/// Blocking x rank grids of blocked CP ground-state runs on the open Ising
/// chain with lambda = 1: "p10" (10 spins) or "p12" (12 spins).
struct ReproduceOptions {
  std::string figure = "p10";
  std::vector<std::string> modes{"greedy", "simultaneous"};
  std::vector<std::size_t> ranks{1, 2, 3, 4};
  std::size_t sweeps = 50;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::filesystem::path out = "out";
  std::filesystem::path cache_dir;  // empty: <out>/oracle-cache
};

std::vector<Blocking> figure_blockings(const std::string& figure);
std::size_t figure_sites(const std::string& figure);

struct CellResult {
  std::string mode;
  Blocking blocking;
  std::size_t rank = 0;
  double energy = 0.0;
  double error = 0.0;  // energy - E0
  std::string csv;     // file name inside the output directory
};

struct ReproduceReport {
  double oracle_energy = 0.0;
  std::vector<CellResult> cells;  // grid order: mode, blocking, rank
  /// Cells below E0 - 1e-10 and cells where simultaneous is worse than
  /// greedy beyond 1e-12.
  std::vector<std::string> flags;
  nlohmann::ordered_json manifest;
};

/// Runs one cell: spectral start for the first addend in both modes.
CellResult run_cell(const SpinHamiltonian& h, const std::string& mode, const Blocking& blocking, std::size_t rank,
                    std::size_t sweeps, std::uint64_t seed, double oracle, std::string* csv_text = nullptr);

/// Runs the grid, writing one CSV per cell and manifest.json into out.
/// Cells run on up to `workers` threads; each cell is deterministic, so the
/// output does not depend on the worker count.
ReproduceReport reproduce_figure(const ReproduceOptions& options);

}  // namespace qtn
