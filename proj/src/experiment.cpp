#include "qtn/experiment.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <thread>

#include "qtn/contract_check.hpp"
#include "qtn/mixed.hpp"
#include "qtn/mps_als.hpp"
#include "qtn/oracle.hpp"
#include "qtn/parafac_als.hpp"
#include "qtn/peps.hpp"

namespace qtn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string field_name(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

[[noreturn]] void bad_value(const std::string& field, const std::string& value, const std::string& expected) {
  throw ConfigError("field '" + field + "': invalid value '" + value + "' (expected " + expected + ")");
}

std::uint64_t parse_u64(const std::string& field, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(field, v, "a nonnegative integer");
  return out;
}

std::size_t parse_size(const std::string& field, const std::string& v) {
  return static_cast<std::size_t>(parse_u64(field, v));
}

double parse_double(const std::string& field, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
    bad_value(field, v, "a finite number");
  }
  return out;
}

bool parse_bool(const std::string& field, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(field, v, "true or false");
}

std::string one_of(const std::string& field, const std::string& v, std::initializer_list<const char*> allowed) {
  std::string list;
  for (const char* a : allowed) {
    if (v == a) return v;
    list += list.empty() ? a : std::string(" | ") + a;
  }
  bad_value(field, v, list);
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

Blocking default_cp_blocking(std::size_t p) { return Blocking({p / 2, p - p / 2}); }

Blocking resolve_blocking(const std::string& text, const Blocking& fallback) {
  if (text.empty()) return fallback;
  return Blocking::parse(text);
}

nlohmann::ordered_json optional_number(std::optional<double> v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

struct Validation {
  double rayleigh = 0.0;
  double difference = 0.0;
  bool passed = false;
};

Validation validate_state(const SpinHamiltonian& h, const DenseState& x, double energy, const Tolerances& tol) {
  Validation v;
  v.rayleigh = rayleigh(h, x, tol);
  v.difference = std::abs(v.rayleigh - energy);
  v.passed = v.difference <= 1e-9 * std::max(1.0, std::abs(energy));
  return v;
}

nlohmann::ordered_json validation_json(const Validation& v) {
  return {{"rayleigh", v.rayleigh}, {"difference", v.difference}, {"passed", v.passed}};
}

nlohmann::ordered_json energies_json(const std::vector<double>& e) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (double x : e) out.push_back(x);
  return out;
}

struct SolverRun {
  std::vector<TraceEntry> trace;
  double energy = 0.0;
  std::function<DenseState()> densify;
  nlohmann::ordered_json details;
};

SolverRun run_solver(const ExperimentConfig& c, const SpinHamiltonian& h) {
  const std::size_t p = h.sites;
  SolverRun run;
  switch (c.method) {
    case Method::mps_als: {
      MpsAlsOptions o;
      o.bond_dim = c.bond_dim;
      o.boundary = c.model.boundary;
      o.sweeps = c.sweeps;
      o.seed = c.seed;
      if (!c.blocking.empty()) o.blocking = Blocking::parse(c.blocking);
      o.tol = c.tol;
      auto r = std::make_shared<MpsAlsResult>(als_ground_state(h, o));
      run.trace = r->trace;
      run.energy = r->energy;
      run.densify = [r, tol = c.tol] { return to_dense(r->state, tol); };
      nlohmann::ordered_json bonds = nlohmann::ordered_json::array();
      for (auto d : r->state.bond_dims()) bonds.push_back(d);
      run.details = {{"sweeps_run", r->sweeps_run}, {"converged", r->converged}, {"bond_dims", bonds}};
      break;
    }
    case Method::parafac_als: {
      CpAlsOptions o;
      o.rank = c.bond_dim;
      o.sweeps = c.sweeps;
      o.seed = c.seed;
      o.init = c.init == "spectral" ? CpInit::spectral : CpInit::random;
      o.spectral = c.spectral == "all-factors" ? SpectralVariant::all_factors : SpectralVariant::local_weighted;
      o.tol = c.tol;
      const Blocking b = resolve_blocking(c.blocking, default_cp_blocking(p));
      auto r = std::make_shared<CpAlsResult>(c.mode == "simultaneous" ? simultaneous_als(h, b, o)
                                                                      : greedy_als(h, b, o));
      run.trace = r->trace;
      run.energy = r->energy;
      run.densify = [r, tol = c.tol] { return to_dense(r->state, tol); };
      run.details = {{"blocking", b.str()},
                     {"mode", c.mode},
                     {"sweeps_run", r->sweeps_run},
                     {"converged", r->converged},
                     {"restarts", r->restarts},
                     {"projected_solves", r->projected_solves},
                     {"stage_energies", energies_json(r->stage_energies)}};
      break;
    }
    case Method::mixed_als: {
      MixedGreedyOptions o;
      o.rank_per_blocking = c.bond_dim;
      o.sweeps = c.sweeps;
      o.seed = c.seed;
      o.tol = c.tol;
      const auto schedule = parse_schedule(c.schedule);
      auto r = std::make_shared<MixedGreedyResult>(ground_state_mixed_greedy(h, schedule, o));
      run.trace = r->trace;
      run.energy = r->energy;
      run.densify = [r, tol = c.tol] { return to_dense(r->state, tol); };
      nlohmann::ordered_json sched = nlohmann::ordered_json::array();
      for (const auto& b : schedule) sched.push_back(b.str());
      run.details = {{"schedule", sched},
                     {"addends", r->state.terms.size()},
                     {"restarts", r->restarts},
                     {"stage_energies", energies_json(r->stage_energies)}};
      break;
    }
    default:
      throw Error("not a solver method");
  }
  return run;
}

RunOutput execute_solver(const ExperimentConfig& c, const Stopwatch& clock) {
  const auto h = build_model(c.model);
  const std::size_t p = h.sites;
  std::optional<double> oracle;
  if (p <= c.tol.dense_site_cap) {
    oracle = cached_oracle_energy(c.model, c.cache_path(), c.tol);
  } else if (c.validate) {
    throw CapExceeded("validation needs the dense oracle, but " + std::to_string(p) + " sites exceed the cap of " +
                      std::to_string(c.tol.dense_site_cap));
  }

  RunOutput out;
  out.csv_name = "trace.csv";
  nlohmann::ordered_json details;
  std::optional<Validation> validation;
  double energy = 0.0;
  std::vector<ConvergenceRecord> records;
  const std::string method = to_string(c.method);

  if (c.method == Method::exact) {
    energy = *oracle;
    ConvergenceRecord r{method, 1, 0, 0, energy, 0.0, c.timing ? clock.seconds() : 0.0, 0};
    records.push_back(r);
    if (c.validate) {
      const auto gs = ground_state_dense(h, c.tol);
      validation = validate_state(h, gs.state, energy, c.tol);
    }
  } else {
    const auto run = run_solver(c, h);
    energy = run.energy;
    records = to_records(method, run.trace, oracle, c.timing);
    details = run.details;
    if (c.validate) validation = validate_state(h, run.densify(), energy, c.tol);
  }

  out.csv = to_csv(records);
  auto& s = out.summary;
  s["schema"] = "qtn-summary/1";
  s["method"] = method;
  s["model"] = model_key(c.model);
  s["final_energy"] = energy;
  s["oracle_energy"] = optional_number(oracle);
  s["gap"] = optional_number(oracle ? std::optional<double>(energy - *oracle) : std::nullopt);
  s["records"] = records.size();
  s["details"] = details.is_null() ? nlohmann::ordered_json::object() : details;
  if (validation) s["validation"] = validation_json(*validation);
  s["seed"] = c.seed;
  s["wall_time"] = c.timing ? clock.seconds() : 0.0;
  s["config"] = config_json(c);
  return out;
}

RunOutput execute_peps(const ExperimentConfig& c, const Stopwatch& clock) {
  const auto bra = random_peps(c.model.rows, c.model.cols, c.bond_dim, c.seed);
  const auto ket = random_peps(c.model.rows, c.model.cols, c.bond_dim, c.seed + 1);
  std::optional<Scalar> dense;
  const std::size_t p = c.model.rows * c.model.cols;
  if (p <= 12 && p <= c.tol.dense_site_cap) dense = to_dense(bra, c.tol).coefficients.dot(to_dense(ket, c.tol).coefficients);

  RunOutput out;
  out.csv_name = "peps.csv";
  std::string csv = "d_cut,value_re,value_im,dense_re,dense_im,rel_deviation,flops\n";
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  std::vector<std::size_t> inversions;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t cut = 1; cut <= c.d_cut; ++cut) {
    FlopCounter flops;
    PepsPhaseFlops phases;
    const Scalar v = inner_peps(bra, ket, cut, &flops, &phases, c.tol);
    std::optional<double> dev;
    if (dense) dev = std::abs(v - *dense) / std::max(1e-300, std::abs(*dense));
    if (dev) {
      if (*dev > prev + 1e-12) inversions.push_back(cut);
      prev = *dev;
    }
    csv += std::to_string(cut) + "," + format_double(v.real()) + "," + format_double(v.imag()) + "," +
           (dense ? format_double(dense->real()) : "") + "," + (dense ? format_double(dense->imag()) : "") + "," +
           (dev ? format_double(*dev) : "") + "," + std::to_string(flops.total) + "\n";
    rows.push_back({{"d_cut", cut},
                    {"value", {v.real(), v.imag()}},
                    {"rel_deviation", optional_number(dev)},
                    {"flops", flops.total},
                    {"flops_physical", phases.physical.total},
                    {"flops_absorb", phases.absorb.total},
                    {"flops_compress", phases.compress.total}});
  }
  out.csv = csv;
  auto& s = out.summary;
  s["schema"] = "qtn-summary/1";
  s["method"] = to_string(c.method);
  s["lattice"] = {c.model.rows, c.model.cols};
  s["bond_dim"] = c.bond_dim;
  s["dense"] = dense ? nlohmann::ordered_json{dense->real(), dense->imag()} : nlohmann::ordered_json(nullptr);
  s["cuts"] = rows;
  // Accuracy in d_cut is not guaranteed to be monotone; reported, not enforced.
  s["monotonicity_violations"] = inversions;
  s["seed"] = c.seed;
  s["wall_time"] = c.timing ? clock.seconds() : 0.0;
  s["config"] = config_json(c);
  return out;
}

RunOutput execute_contract_check(const ExperimentConfig& c, const Stopwatch& clock) {
  const auto checks = run_contract_check(c.instances, c.seed);
  RunOutput out;
  out.csv_name = "check.csv";
  std::string csv = "kernel,instances,max_rel_error,tolerance,max_cost_ratio,bound,passed\n";
  nlohmann::ordered_json kernels = nlohmann::ordered_json::array();
  bool all = true;
  for (const auto& k : checks) {
    csv += k.kernel + "," + std::to_string(k.instances) + "," + format_double(k.max_rel_error) + "," +
           format_double(k.tolerance) + "," + format_double(k.max_cost_ratio) + ",\"" + k.bound + "\"," +
           bool_text(k.passed) + "\n";
    kernels.push_back({{"kernel", k.kernel},
                       {"instances", k.instances},
                       {"max_rel_error", k.max_rel_error},
                       {"tolerance", k.tolerance},
                       {"max_cost_ratio", k.max_cost_ratio},
                       {"bound", k.bound},
                       {"passed", k.passed}});
    all = all && k.passed;
  }
  out.csv = csv;
  auto& s = out.summary;
  s["schema"] = "qtn-summary/1";
  s["method"] = to_string(c.method);
  s["passed"] = all;
  s["kernels"] = kernels;
  s["seed"] = c.seed;
  s["wall_time"] = c.timing ? clock.seconds() : 0.0;
  s["config"] = config_json(c);
  return out;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::exact: return "exact";
    case Method::mps_als: return "mps-als";
    case Method::parafac_als: return "parafac-als";
    case Method::mixed_als: return "mixed-als";
    case Method::peps_contract: return "peps-contract";
    case Method::contract_check: return "contract-check";
  }
  return "exact";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::exact, Method::mps_als, Method::parafac_als, Method::mixed_als, Method::peps_contract,
                   Method::contract_check}) {
    if (to_string(m) == name) return m;
  }
  bad_value("method", name, "exact | mps-als | parafac-als | mixed-als | peps-contract | contract-check");
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return exit_config;
  if (dynamic_cast<const CapExceeded*>(&e) != nullptr) return exit_cap;
  if (dynamic_cast<const NumericalError*>(&e) != nullptr) return exit_solver;
  return exit_other;
}

SpinHamiltonian build_model(const ModelSpec& m) {
  if (m.name == "ising") return build_ising(m.sites, m.lambda, m.boundary);
  if (m.name == "heisenberg-xy") return build_heisenberg_xy(m.sites, m.jx, m.jy, m.lambda, m.boundary);
  if (m.name == "ising-2d") return build_ising_2d(m.rows, m.cols, m.lambda, m.boundary);
  bad_value("model.name", m.name, "ising | heisenberg-xy | ising-2d");
}

std::string model_key(const ModelSpec& m) {
  std::string key = m.name;
  if (m.name == "ising-2d") {
    key += " rows=" + std::to_string(m.rows) + " cols=" + std::to_string(m.cols);
  } else {
    key += " sites=" + std::to_string(m.sites);
  }
  key += " lambda=" + format_double(m.lambda);
  if (m.name == "heisenberg-xy") key += " jx=" + format_double(m.jx) + " jy=" + format_double(m.jy);
  return key + " boundary=" + to_string(m.boundary);
}

std::uint64_t model_hash(const ModelSpec& m) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : model_key(m)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::filesystem::path ExperimentConfig::cache_path() const {
  return cache_dir.empty() ? std::filesystem::path(out) / "oracle-cache" : std::filesystem::path(cache_dir);
}

void set_field(ExperimentConfig& c, const std::string& section, const std::string& key, const std::string& value) {
  const std::string f = field_name(section, key);
  if (section.empty()) {
    if (key == "method") c.method = parse_method(value);
    else if (key == "seed") c.seed = parse_u64(f, value);
    else if (key == "out") c.out = value;
    else if (key == "validate") c.validate = parse_bool(f, value);
    else if (key == "timing") c.timing = parse_bool(f, value);
    else if (key == "workers") c.workers = parse_size(f, value);
    else if (key == "cache_dir") c.cache_dir = value;
    else throw ConfigError("unknown field '" + f + "'");
  } else if (section == "model") {
    auto& m = c.model;
    if (key == "name") m.name = one_of(f, value, {"ising", "heisenberg-xy", "ising-2d"});
    else if (key == "sites") m.sites = parse_size(f, value);
    else if (key == "rows") m.rows = parse_size(f, value);
    else if (key == "cols") m.cols = parse_size(f, value);
    else if (key == "lambda") m.lambda = parse_double(f, value);
    else if (key == "jx") m.jx = parse_double(f, value);
    else if (key == "jy") m.jy = parse_double(f, value);
    else if (key == "boundary") m.boundary = parse_boundary(one_of(f, value, {"open", "periodic"}));
    else throw ConfigError("unknown field '" + f + "'");
  } else if (section == "solver") {
    if (key == "bond_dim") c.bond_dim = parse_size(f, value);
    else if (key == "blocking") c.blocking = value;
    else if (key == "schedule") c.schedule = value;
    else if (key == "sweeps") c.sweeps = parse_size(f, value);
    else if (key == "init") c.init = one_of(f, value, {"random", "spectral"});
    else if (key == "mode") c.mode = one_of(f, value, {"greedy", "simultaneous"});
    else if (key == "spectral") c.spectral = one_of(f, value, {"local-weighted", "all-factors"});
    else if (key == "d_cut") c.d_cut = parse_size(f, value);
    else if (key == "instances") c.instances = parse_size(f, value);
    else throw ConfigError("unknown field '" + f + "'");
  } else if (section == "tolerances") {
    auto& t = c.tol;
    if (key == "hermitian") t.hermitian = parse_double(f, value);
    else if (key == "pd_floor") t.pd_floor = parse_double(f, value);
    else if (key == "projection_floor") t.projection_floor = parse_double(f, value);
    else if (key == "zero_drop") t.zero_drop = parse_double(f, value);
    else if (key == "pinned_coordinate") t.pinned_coordinate = parse_double(f, value);
    else if (key == "convergence") t.convergence = parse_double(f, value);
    else if (key == "dense_site_cap") t.dense_site_cap = parse_size(f, value);
    else throw ConfigError("unknown field '" + f + "'");
  } else {
    throw ConfigError("unknown section [" + section + "]");
  }
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string where = source + ":" + std::to_string(number) + ": ";
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section != "model" && section != "solver" && section != "tolerances") {
        throw ConfigError(where + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    try {
      set_field(c, section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    } catch (const Error& e) {
      throw ConfigError(where + e.what());
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "method = " << to_string(c.method) << "\n"
    << "seed = " << c.seed << "\n"
    << "out = " << c.out << "\n"
    << "validate = " << bool_text(c.validate) << "\n"
    << "timing = " << bool_text(c.timing) << "\n"
    << "workers = " << c.workers << "\n"
    << "cache_dir = " << c.cache_dir << "\n\n"
    << "[model]\n"
    << "name = " << c.model.name << "\n"
    << "sites = " << c.model.sites << "\n"
    << "rows = " << c.model.rows << "\n"
    << "cols = " << c.model.cols << "\n"
    << "lambda = " << format_double(c.model.lambda) << "\n"
    << "jx = " << format_double(c.model.jx) << "\n"
    << "jy = " << format_double(c.model.jy) << "\n"
    << "boundary = " << to_string(c.model.boundary) << "\n\n"
    << "[solver]\n"
    << "bond_dim = " << c.bond_dim << "\n"
    << "blocking = " << c.blocking << "\n"
    << "schedule = " << c.schedule << "\n"
    << "sweeps = " << c.sweeps << "\n"
    << "init = " << c.init << "\n"
    << "mode = " << c.mode << "\n"
    << "spectral = " << c.spectral << "\n"
    << "d_cut = " << c.d_cut << "\n"
    << "instances = " << c.instances << "\n\n"
    << "[tolerances]\n"
    << "hermitian = " << format_double(c.tol.hermitian) << "\n"
    << "pd_floor = " << format_double(c.tol.pd_floor) << "\n"
    << "projection_floor = " << format_double(c.tol.projection_floor) << "\n"
    << "zero_drop = " << format_double(c.tol.zero_drop) << "\n"
    << "pinned_coordinate = " << format_double(c.tol.pinned_coordinate) << "\n"
    << "convergence = " << format_double(c.tol.convergence) << "\n"
    << "dense_site_cap = " << c.tol.dense_site_cap << "\n";
  return o.str();
}

void check_config(const ExperimentConfig& c) {
  const auto& m = c.model;
  if (m.name == "ising-2d") {
    if (m.rows == 0 || m.cols == 0) throw ConfigError("field 'model.rows'/'model.cols': lattice must be nonempty");
  } else if (m.sites < 2 && c.method != Method::peps_contract && c.method != Method::contract_check) {
    throw ConfigError("field 'model.sites': at least 2 sites required");
  }
  if (c.workers == 0) throw ConfigError("field 'workers': must be positive");
  if (c.bond_dim == 0) throw ConfigError("field 'solver.bond_dim': must be positive");
  if (c.sweeps == 0) throw ConfigError("field 'solver.sweeps': must be positive");
  if (c.d_cut == 0) throw ConfigError("field 'solver.d_cut': must be positive");
  if (c.instances == 0) throw ConfigError("field 'solver.instances': must be positive");
  const std::size_t p = m.physical_sites();
  if (!c.blocking.empty() && (c.method == Method::mps_als || c.method == Method::parafac_als)) {
    Blocking b;
    try {
      b = Blocking::parse(c.blocking);
    } catch (const Error& e) {
      throw ConfigError(std::string("field 'solver.blocking': ") + e.what());
    }
    if (b.sites() != p) {
      throw ConfigError("field 'solver.blocking': " + b.str() + " covers " + std::to_string(b.sites()) +
                        " sites, the model has " + std::to_string(p));
    }
  }
  if (c.method == Method::mixed_als) {
    std::vector<Blocking> s;
    try {
      s = parse_schedule(c.schedule);
    } catch (const Error& e) {
      throw ConfigError(std::string("field 'solver.schedule': ") + e.what());
    }
    for (const auto& b : s) {
      if (b.sites() != p) throw ConfigError("field 'solver.schedule': blocking " + b.str() + " does not cover the model");
    }
    if (m.boundary != Boundary::open) throw ConfigError("field 'model.boundary': mixed-als needs an open chain");
  }
  if (c.method == Method::parafac_als && c.blocking.empty() && p < 2) {
    throw ConfigError("field 'solver.blocking': needs at least 2 sites");
  }
}

nlohmann::ordered_json config_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["method"] = to_string(c.method);
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["validate"] = c.validate;
  j["timing"] = c.timing;
  j["workers"] = c.workers;
  j["cache_dir"] = c.cache_dir;
  j["model"] = {{"name", c.model.name},   {"sites", c.model.sites}, {"rows", c.model.rows},
                {"cols", c.model.cols},   {"lambda", c.model.lambda}, {"jx", c.model.jx},
                {"jy", c.model.jy},       {"boundary", to_string(c.model.boundary)}};
  j["solver"] = {{"bond_dim", c.bond_dim}, {"blocking", c.blocking}, {"schedule", c.schedule},
                 {"sweeps", c.sweeps},     {"init", c.init},         {"mode", c.mode},
                 {"spectral", c.spectral}, {"d_cut", c.d_cut},       {"instances", c.instances}};
  j["tolerances"] = {{"hermitian", c.tol.hermitian},
                     {"pd_floor", c.tol.pd_floor},
                     {"projection_floor", c.tol.projection_floor},
                     {"zero_drop", c.tol.zero_drop},
                     {"pinned_coordinate", c.tol.pinned_coordinate},
                     {"convergence", c.tol.convergence},
                     {"dense_site_cap", c.tol.dense_site_cap}};
  return j;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("format_double failed");
  return std::string(buf, ptr);
}

std::string csv_header() { return "method,stage,sweep,position,energy,abs_error,elapsed,flops"; }

std::string csv_row(const ConvergenceRecord& r) {
  return r.method + "," + std::to_string(r.stage) + "," + std::to_string(r.sweep) + "," + std::to_string(r.position) +
         "," + format_double(r.energy) + "," + (r.abs_error ? format_double(*r.abs_error) : "") + "," +
         format_double(r.elapsed) + "," + std::to_string(r.flops);
}

std::vector<ConvergenceRecord> to_records(const std::string& method, const std::vector<TraceEntry>& trace,
                                          std::optional<double> oracle, bool timing) {
  std::vector<ConvergenceRecord> out;
  for (const auto& e : trace) {
    if (!std::isfinite(e.energy)) throw NumericalError(method + ": non-finite energy in the trace");
    std::optional<double> err;
    if (oracle) err = std::abs(e.energy - *oracle);
    out.push_back({method, e.stage, e.sweep, e.position, e.energy, err, timing ? e.elapsed : 0.0, e.flops});
  }
  return out;
}

std::string to_csv(const std::vector<ConvergenceRecord>& records) {
  std::string out = csv_header() + "\n";
  for (const auto& r : records) out += csv_row(r) + "\n";
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  static std::atomic<std::uint64_t> counter{0};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + "-" +
         std::to_string(counter++);
  {
    std::ofstream o(tmp, std::ios::binary);
    if (!o) throw Error("cannot write " + tmp.string());
    o << content;
    if (!o) throw Error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

double cached_oracle_energy(const ModelSpec& m, const std::filesystem::path& cache_dir, const Tolerances& tol) {
  const auto key = model_key(m);
  char name[32];
  std::snprintf(name, sizeof(name), "%016llx.oracle", static_cast<unsigned long long>(model_hash(m)));
  const auto file = cache_dir / name;
  {
    std::ifstream in(file);
    std::string stored_key, stored_energy;
    if (in && std::getline(in, stored_key) && std::getline(in, stored_energy) && stored_key == key) {
      double e = 0.0;
      const auto [ptr, ec] = std::from_chars(stored_energy.data(), stored_energy.data() + stored_energy.size(), e);
      if (ec == std::errc() && ptr == stored_energy.data() + stored_energy.size()) return e;
    }
  }
  const auto h = build_model(m);
  if (h.sites > tol.dense_site_cap) {
    throw CapExceeded("oracle: " + std::to_string(h.sites) + " sites exceed the dense cap of " +
                      std::to_string(tol.dense_site_cap));
  }
  const double e = ground_state_dense(h, tol).energy;
  write_file_atomic(file, key + "\n" + format_double(e) + "\n");
  return e;
}

RunOutput execute(const ExperimentConfig& c) {
  check_config(c);
  const Stopwatch clock;
  switch (c.method) {
    case Method::peps_contract: return execute_peps(c, clock);
    case Method::contract_check: return execute_contract_check(c, clock);
    default: return execute_solver(c, clock);
  }
}

int run_experiment(const ExperimentConfig& c, std::ostream& log, std::ostream& err) {
  try {
    const auto out = execute(c);
    const std::filesystem::path dir(c.out);
    write_file_atomic(dir / out.csv_name, out.csv);
    write_file_atomic(dir / "summary.json", out.summary.dump(2) + "\n");
    log << "wrote " << (dir / out.csv_name).string() << " and " << (dir / "summary.json").string() << "\n";
    if (out.summary.contains("validation") && !out.summary["validation"]["passed"].get<bool>()) {
      err << "error [solver]: final energy does not match the Rayleigh quotient of the final state\n";
      return exit_solver;
    }
    if (out.summary.contains("passed") && !out.summary["passed"].get<bool>()) {
      err << "error: contraction check failed for at least one kernel\n";
      return exit_other;
    }
    return exit_ok;
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    const char* category = code == exit_config ? "config" : code == exit_cap ? "cap" : code == exit_solver ? "solver"
                                                                                                          : "error";
    err << "error [" << category << "] " << to_string(c.method) << ": " << e.what() << "\n";
    return code;
  }
}

}  // namespace qtn
