#include "qtn/reproduce.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "qtn/experiment.hpp"
#include "qtn/parafac_als.hpp"

namespace qtn {

std::vector<Blocking> figure_blockings(const std::string& figure) {
  if (figure == "p10") return {Blocking({5, 5}), Blocking({2, 3, 5}), Blocking({2, 2, 2, 2, 2}), Blocking::ones(10)};
  if (figure == "p12") return {Blocking({6, 6}), Blocking({4, 4, 4}), Blocking({3, 3, 3, 3}), Blocking({2, 2, 2, 2, 2, 2})};
  throw ConfigError("field 'figure': invalid value '" + figure + "' (expected p10 | p12)");
}

std::size_t figure_sites(const std::string& figure) {
  if (figure == "p10") return 10;
  if (figure == "p12") return 12;
  throw ConfigError("field 'figure': invalid value '" + figure + "' (expected p10 | p12)");
}

namespace {

std::string cell_file(const std::string& mode, const Blocking& b, std::size_t rank) {
  std::string name = mode + "_";
  for (std::size_t i = 0; i < b.blocks(); ++i) name += (i ? "-" : "") + std::to_string(b.widths[i]);
  return name + "_R" + std::to_string(rank) + ".csv";
}

}  // namespace

CellResult run_cell(const SpinHamiltonian& h, const std::string& mode, const Blocking& blocking, std::size_t rank,
                    std::size_t sweeps, std::uint64_t seed, double oracle, std::string* csv_text) {
  if (mode != "greedy" && mode != "simultaneous") {
    throw ConfigError("field 'modes': invalid value '" + mode + "' (expected greedy | simultaneous)");
  }
  CpAlsOptions o;
  o.rank = rank;
  o.sweeps = sweeps;
  o.seed = seed;
  o.init = CpInit::spectral;
  const auto r = mode == "greedy" ? greedy_als(h, blocking, o) : simultaneous_als(h, blocking, o);
  if (csv_text != nullptr) *csv_text = to_csv(to_records("parafac-als", r.trace, oracle, false));
  return {mode, blocking, rank, r.energy, r.energy - oracle, cell_file(mode, blocking, rank)};
}

ReproduceReport reproduce_figure(const ReproduceOptions& options) {
  if (options.workers == 0) throw ConfigError("field 'workers': must be positive");
  if (options.sweeps == 0) throw ConfigError("field 'sweeps': must be positive");
  const auto blockings = figure_blockings(options.figure);
  ModelSpec model;
  model.sites = figure_sites(options.figure);
  const auto h = build_model(model);
  const auto cache = options.cache_dir.empty() ? options.out / "oracle-cache" : options.cache_dir;

  ReproduceReport report;
  report.oracle_energy = cached_oracle_energy(model, cache, Tolerances{});

  struct Job {
    std::string mode;
    Blocking blocking;
    std::size_t rank;
  };
  std::vector<Job> jobs;
  for (const auto& mode : options.modes) {
    if (mode != "greedy" && mode != "simultaneous") {
      throw ConfigError("field 'modes': invalid value '" + mode + "' (expected greedy | simultaneous)");
    }
    for (const auto& b : blockings) {
      for (auto rank : options.ranks) {
        if (rank == 0) throw ConfigError("field 'ranks': must be positive");
        jobs.push_back({mode, b, rank});
      }
    }
  }

  report.cells.resize(jobs.size());
  std::vector<std::string> failures(jobs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& job = jobs[i];
      try {
        std::string csv;
        report.cells[i] = run_cell(h, job.mode, job.blocking, job.rank, options.sweeps, options.seed,
                                   report.oracle_energy, &csv);
        write_file_atomic(options.out / report.cells[i].csv, csv);
      } catch (const std::exception& e) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        report.cells[i] = {job.mode, job.blocking, job.rank, nan, nan, ""};
        failures[i] = e.what();
      }
    }
  };
  if (options.workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(options.workers, jobs.size()); ++w) pool.emplace_back(work);
  }

  auto cell_name = [](const CellResult& c) {
    return c.mode + " [" + c.blocking.str() + "] R=" + std::to_string(c.rank);
  };
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& c = report.cells[i];
    if (!failures[i].empty()) {
      report.flags.push_back(cell_name(c) + ": failed: " + failures[i]);
    } else if (c.error < -1e-10) {
      report.flags.push_back(cell_name(c) + ": energy below the exact ground state");
    }
  }
  for (const auto& g : report.cells) {
    if (g.mode != "greedy" || std::isnan(g.energy)) continue;
    for (const auto& s : report.cells) {
      if (s.mode == "simultaneous" && s.blocking == g.blocking && s.rank == g.rank && s.energy > g.energy + 1e-12) {
        report.flags.push_back(cell_name(s) + ": simultaneous above greedy by " + format_double(s.energy - g.energy));
      }
    }
  }

  auto& m = report.manifest;
  m["schema"] = "qtn-reproduce/1";
  m["figure"] = options.figure;
  m["model"] = model_key(model);
  m["oracle_energy"] = report.oracle_energy;
  m["sweeps"] = options.sweeps;
  m["seed"] = options.seed;
  m["init"] = "spectral";
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"mode", c.mode},
                     {"blocking", c.blocking.str()},
                     {"rank", c.rank},
                     {"energy", std::isnan(c.energy) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(c.energy)},
                     {"error", std::isnan(c.error) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(c.error)},
                     {"csv", c.csv}});
  }
  m["cells"] = cells;
  m["flags"] = report.flags;
  write_file_atomic(options.out / "manifest.json", m.dump(2) + "\n");
  return report;
}

}  // namespace qtn
