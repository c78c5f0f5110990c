#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qtn/hamiltonian.hpp"

namespace qtn {

/// Invalid configuration text or flag; the message names the line or field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Method { exact, mps_als, parafac_als, mixed_als, peps_contract, contract_check };

std::string to_string(Method m);
Method parse_method(const std::string& name);

/// Process exit codes.
enum ExitCode : int { exit_ok = 0, exit_other = 1, exit_config = 2, exit_cap = 3, exit_solver = 4 };

/// Maps an exception raised by a run to its exit code.
int exit_code_for(const std::exception& e);

struct ModelSpec {
  std::string name = "ising";  // ising | heisenberg-xy | ising-2d
  std::size_t sites = 10;      // chains
  std::size_t rows = 3;        // ising-2d and peps-contract
  std::size_t cols = 3;
  double lambda = 1.0;
  double jx = 1.0;
  double jy = 1.0;
  Boundary boundary = Boundary::open;

  std::size_t physical_sites() const { return name == "ising-2d" ? rows * cols : sites; }
  bool operator==(const ModelSpec&) const = default;
};

SpinHamiltonian build_model(const ModelSpec& m);

/// Canonical one-line description; equal keys mean equal Hamiltonians.
std::string model_key(const ModelSpec& m);
/// 64-bit FNV-1a of model_key.
std::uint64_t model_hash(const ModelSpec& m);

struct ExperimentConfig {
  Method method = Method::exact;
  std::uint64_t seed = 1;
  std::string out = "out";
  bool validate = false;
  bool timing = false;
  std::size_t workers = 1;
  std::string cache_dir;  // empty: <out>/oracle-cache

  ModelSpec model;

  // [solver]
  std::size_t bond_dim = 4;  // MPS D, CP rank, addends per blocking, PEPS D
  std::string blocking;      // empty: all-ones for MPS, two halves for CP
  std::string schedule = "5,5|2,3,5";
  std::size_t sweeps = 10;
  std::string init = "random";           // random | spectral
  std::string mode = "greedy";           // greedy | simultaneous
  std::string spectral = "local-weighted";  // local-weighted | all-factors
  std::size_t d_cut = 4;
  std::size_t instances = 200;

  Tolerances tol;

  std::filesystem::path cache_path() const;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Key/value text with [model], [solver] and [tolerances] sections; keys
/// before the first section are top-level. '#' starts a comment.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& c);

/// Sets one field from text; section is "", "model", "solver" or
/// "tolerances". Throws ConfigError naming the field.
void set_field(ExperimentConfig& c, const std::string& section, const std::string& key, const std::string& value);

/// Rejects combinations that cannot run (unknown model, bad blocking, ...).
void check_config(const ExperimentConfig& c);

nlohmann::ordered_json config_json(const ExperimentConfig& c);

/// One CSV row; the column order is the field order.
struct ConvergenceRecord {
  std::string method;
  std::size_t stage = 1;
  std::size_t sweep = 0;
  std::size_t position = 0;
  double energy = 0.0;
  std::optional<double> abs_error;
  double elapsed = 0.0;
  std::uint64_t flops = 0;
};

std::string csv_header();
std::string csv_row(const ConvergenceRecord& r);
/// Converts a solver trace; elapsed stays 0 unless `timing`.
std::vector<ConvergenceRecord> to_records(const std::string& method, const std::vector<TraceEntry>& trace,
                                          std::optional<double> oracle, bool timing);
std::string to_csv(const std::vector<ConvergenceRecord>& records);

/// Shortest text that reads back to the same double.
std::string format_double(double v);

/// Ground-state energy from the cache directory, computed and stored on a
/// miss. Throws CapExceeded above tol.dense_site_cap.
double cached_oracle_energy(const ModelSpec& m, const std::filesystem::path& cache_dir, const Tolerances& tol);

/// Writes through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

struct RunOutput {
  std::string csv_name;  // file name inside the output directory
  std::string csv;
  nlohmann::ordered_json summary;
};

/// Runs the configured method without touching the output directory
/// (except for the oracle cache).
RunOutput execute(const ExperimentConfig& c);

/// execute() plus writing <out>/<csv_name> and <out>/summary.json. Returns
/// the exit code and prints a diagnostic to `err` on failure.
int run_experiment(const ExperimentConfig& c, std::ostream& log, std::ostream& err);

}  // namespace qtn
