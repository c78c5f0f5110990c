#include "qtn/cli_options.hpp"

#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "qtn/experiment.hpp"
#include "qtn/reproduce.hpp"

namespace qtn {

namespace {

struct FlagField {
  const char* flag;
  const char* section;
  const char* key;
  const char* help;
};

// Flags that map one-to-one onto config fields.
const FlagField value_flags[] = {
    {"--seed", "", "seed", "random seed"},
    {"--out", "", "out", "output directory"},
    {"--workers", "", "workers", "worker threads"},
    {"--cache-dir", "", "cache_dir", "oracle cache directory (default <out>/oracle-cache)"},
    {"--model", "model", "name", "ising | heisenberg-xy | ising-2d"},
    {"--sites", "model", "sites", "chain length"},
    {"--rows", "model", "rows", "lattice rows"},
    {"--cols", "model", "cols", "lattice columns"},
    {"--lambda", "model", "lambda", "transverse field"},
    {"--jx", "model", "jx", "XX coupling"},
    {"--jy", "model", "jy", "YY coupling"},
    {"--boundary", "model", "boundary", "open | periodic"},
    {"--bond-dim", "solver", "bond_dim", "MPS bond dimension, CP rank, addends per blocking or PEPS bond"},
    {"--blocking", "solver", "blocking", "block widths, e.g. 5,5"},
    {"--schedule", "solver", "schedule", "blockings separated by |, e.g. 5,5|2,3,5"},
    {"--sweeps", "solver", "sweeps", "sweep limit"},
    {"--init", "solver", "init", "random | spectral"},
    {"--mode", "solver", "mode", "greedy | simultaneous"},
    {"--spectral", "solver", "spectral", "local-weighted | all-factors"},
    {"--d-cut", "solver", "d_cut", "largest boundary bond"},
    {"--instances", "solver", "instances", "random instances per kernel"},
};

struct ExperimentCommand {
  Method method;
  CLI::App* app = nullptr;
  std::string config;
  std::map<std::string, std::string> values;
  std::vector<std::string> sets;
  bool validate = false;
  bool timing = false;
  bool dump = false;
};

void add_experiment_options(ExperimentCommand& cmd) {
  auto* app = cmd.app;
  app->add_option("--config", cmd.config, "config file")->check(CLI::ExistingFile);
  for (const auto& f : value_flags) app->add_option(f.flag, cmd.values[f.flag], f.help);
  app->add_flag("--validate", cmd.validate, "check the final energy against the Rayleigh quotient of the dense state");
  app->add_flag("--timing", cmd.timing, "record wall-clock times (output is no longer byte-reproducible)");
  app->add_option("--set", cmd.sets, "override any field as section.key=value (top-level fields without section)");
  app->add_flag("--dump-config", cmd.dump, "print the effective config and exit");
}

ExperimentConfig build_config(const ExperimentCommand& cmd) {
  ExperimentConfig c = cmd.config.empty() ? ExperimentConfig{} : load_config(cmd.config);
  c.method = cmd.method;
  for (const auto& f : value_flags) {
    if (cmd.app->count(f.flag) > 0) {
      try {
        set_field(c, f.section, f.key, cmd.values.at(f.flag));
      } catch (const ConfigError& e) {
        throw ConfigError(std::string(f.flag) + ": " + e.what());
      }
    }
  }
  if (cmd.validate) c.validate = true;
  if (cmd.timing) c.timing = true;
  for (const auto& s : cmd.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set " + s + ": expected section.key=value");
    const std::string path = s.substr(0, eq);
    const auto dot = path.find('.');
    const std::string section = dot == std::string::npos ? "" : path.substr(0, dot);
    const std::string key = dot == std::string::npos ? path : path.substr(dot + 1);
    set_field(c, section, key, s.substr(eq + 1));
  }
  return c;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ground states and contractions of spin chains in tensor formats", "qtn"};
  app.require_subcommand(1);

  std::vector<ExperimentCommand> commands;
  const std::pair<Method, const char*> subs[] = {
      {Method::exact, "dense ground-state energy"},
      {Method::mps_als, "MPS ALS ground state"},
      {Method::parafac_als, "blocked CP ground state (greedy or simultaneous ALS)"},
      {Method::mixed_als, "greedy ground state over a schedule of blockings"},
      {Method::peps_contract, "PEPS inner product for d_cut = 1..d_cut"},
      {Method::contract_check, "every contraction kernel against dense on random instances"},
  };
  commands.reserve(std::size(subs));
  for (const auto& [method, help] : subs) {
    ExperimentCommand cmd;
    cmd.method = method;
    cmd.app = app.add_subcommand(to_string(method), help);
    commands.push_back(std::move(cmd));
    add_experiment_options(commands.back());
  }

  ReproduceOptions repro;
  std::string modes = "greedy,simultaneous";
  std::string ranks = "1,2,3,4";
  std::string repro_out = "out";
  std::string repro_cache;
  auto* rep = app.add_subcommand("reproduce", "blocking x rank grid of blocked CP runs on the Ising chain");
  rep->add_option("--figure", repro.figure, "p10 | p12")->check(CLI::IsMember({"p10", "p12"}));
  rep->add_option("--modes", modes, "comma-separated: greedy,simultaneous");
  rep->add_option("--ranks", ranks, "comma-separated ranks");
  rep->add_option("--sweeps", repro.sweeps, "sweep limit per cell");
  rep->add_option("--seed", repro.seed, "random seed");
  rep->add_option("--workers", repro.workers, "worker threads");
  rep->add_option("--out", repro_out, "output directory");
  rep->add_option("--cache-dir", repro_cache, "oracle cache directory (default <out>/oracle-cache)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_config;
  }

  if (rep->parsed()) {
    try {
      repro.modes = split_list(modes);
      repro.ranks.clear();
      for (const auto& r : split_list(ranks)) {
        std::size_t v = 0;
        try {
          std::size_t used = 0;
          v = std::stoul(r, &used);
          if (used != r.size()) throw std::invalid_argument(r);
        } catch (const std::logic_error&) {
          throw ConfigError("--ranks: invalid value '" + r + "'");
        }
        repro.ranks.push_back(v);
      }
      repro.out = repro_out;
      repro.cache_dir = repro_cache;
      const auto report = reproduce_figure(repro);
      out << "E0 = " << format_double(report.oracle_energy) << "\n";
      for (const auto& c : report.cells) {
        out << c.mode << " [" << c.blocking.str() << "] R=" << c.rank << " error " << format_double(c.error) << "\n";
      }
      for (const auto& f : report.flags) err << "flag: " << f << "\n";
      out << "wrote " << (repro.out / "manifest.json").string() << "\n";
      return exit_ok;
    } catch (const std::exception& e) {
      err << "error [reproduce]: " << e.what() << "\n";
      return exit_code_for(e);
    }
  }

  for (auto& cmd : commands) {
    if (!cmd.app->parsed()) continue;
    ExperimentConfig c;
    try {
      c = build_config(cmd);
      check_config(c);
    } catch (const std::exception& e) {
      err << "error [config] " << to_string(cmd.method) << ": " << e.what() << "\n";
      return exit_config;
    }
    if (cmd.dump) {
      out << serialize_config(c);
      return exit_ok;
    }
    return run_experiment(c, out, err);
  }
  return exit_other;
}

}  // namespace qtn
