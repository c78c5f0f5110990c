#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qtn/cli_options.hpp"
#include "qtn/contract_check.hpp"
#include "qtn/experiment.hpp"
#include "qtn/oracle.hpp"
#include "qtn/reproduce.hpp"

using namespace qtn;
namespace fs = std::filesystem;

namespace {

// Fresh directory per test, removed afterwards.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("qtn-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  args.insert(args.begin(), "qtn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out != nullptr) *out = o.str();
  if (err != nullptr) *err = e.str();
  return rc;
}

ExperimentConfig unusual_config() {
  ExperimentConfig c;
  c.method = Method::mixed_als;
  c.seed = 987654321;
  c.out = "some dir/with spaces";
  c.validate = true;
  c.timing = true;
  c.workers = 3;
  c.cache_dir = "/tmp/cache";
  c.model.name = "heisenberg-xy";
  c.model.sites = 7;
  c.model.rows = 2;
  c.model.cols = 5;
  c.model.lambda = 0.1;
  c.model.jx = 1.0 / 3.0;
  c.model.jy = -2.5e-7;
  c.model.boundary = Boundary::periodic;
  c.bond_dim = 6;
  c.blocking = "3,4";
  c.schedule = "7|3,4";
  c.sweeps = 17;
  c.init = "spectral";
  c.mode = "simultaneous";
  c.spectral = "all-factors";
  c.d_cut = 9;
  c.instances = 11;
  c.tol.hermitian = 3e-9;
  c.tol.projection_floor = 1.2345678901234567e-11;
  c.tol.dense_site_cap = 12;
  return c;
}

}  // namespace

TEST(Config, RoundTripIsLossless) {
  const auto c = unusual_config();
  const auto text = serialize_config(c);
  const auto back = parse_config(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize_config(back), text);
  EXPECT_EQ(parse_config(serialize_config(ExperimentConfig{})), ExperimentConfig{});
}

TEST(Config, CommentsBlankLinesAndSpacing) {
  const auto c = parse_config("# header\n\nmethod=mps-als\n  seed =  5 \n[model]\n# note\nsites= 6\n[solver]\nbond_dim =2\n");
  EXPECT_EQ(c.method, Method::mps_als);
  EXPECT_EQ(c.seed, 5U);
  EXPECT_EQ(c.model.sites, 6U);
  EXPECT_EQ(c.bond_dim, 2U);
}

TEST(Config, ErrorsNameLineAndField) {
  auto message = [](const std::string& text) {
    try {
      parse_config(text, "cfg");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("seed = 1\n[model]\nsitez = 4\n").find("cfg:3"), std::string::npos);
  EXPECT_NE(message("seed = 1\n[model]\nsitez = 4\n").find("model.sitez"), std::string::npos);
  EXPECT_NE(message("[solver]\nsweeps = -1\n").find("solver.sweeps"), std::string::npos);
  EXPECT_NE(message("[model]\nlambda = 1.0x\n").find("model.lambda"), std::string::npos);
  EXPECT_NE(message("[nope]\n").find("unknown section"), std::string::npos);
  EXPECT_NE(message("[model\n").find("cfg:1"), std::string::npos);
  EXPECT_NE(message("seed 4\n").find("key = value"), std::string::npos);
  EXPECT_NE(message("method = dmrg\n").find("method"), std::string::npos);
  EXPECT_NE(message("[solver]\ninit = zeros\n").find("random | spectral"), std::string::npos);
  EXPECT_NE(message("validate = maybe\n").find("validate"), std::string::npos);
  EXPECT_NE(message("[tolerances]\nhermitian = nan\n").find("finite"), std::string::npos);
}

TEST(Config, CheckRejectsInconsistentRuns) {
  ExperimentConfig c;
  c.method = Method::parafac_als;
  c.blocking = "5,4";
  EXPECT_THROW(check_config(c), ConfigError);
  c.blocking = "5,x";
  EXPECT_THROW(check_config(c), ConfigError);
  c.blocking = "5,5";
  EXPECT_NO_THROW(check_config(c));
  c.method = Method::mixed_als;
  c.schedule = "5,5|3,3";
  EXPECT_THROW(check_config(c), ConfigError);
  c.schedule = "5,5|2,8";
  EXPECT_NO_THROW(check_config(c));
  c.model.boundary = Boundary::periodic;
  EXPECT_THROW(check_config(c), ConfigError);
  ExperimentConfig z;
  z.sweeps = 0;
  EXPECT_THROW(check_config(z), ConfigError);
}

TEST(Records, FormatDoubleRoundTrips) {
  for (double v : {0.0, 1.0, -12.381489999654757, 0.1, 1e-300, 6.02214076e23, 1.0 / 3.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v) << format_double(v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Records, CsvColumnsInFieldOrder) {
  EXPECT_EQ(csv_header(), "method,stage,sweep,position,energy,abs_error,elapsed,flops");
  const std::vector<TraceEntry> trace{{1, 0, 0, -1.5, 10, false, 0.25}, {1, 1, 2, -2.0, 40, false, 0.5}};
  const auto with = to_records("mps-als", trace, -2.5, false);
  EXPECT_EQ(csv_row(with[1]), "mps-als,1,1,2,-2,0.5,0,40");
  const auto timed = to_records("mps-als", trace, std::nullopt, true);
  EXPECT_EQ(csv_row(timed[0]), "mps-als,1,0,0,-1.5,,0.25,10");
  EXPECT_EQ(to_csv(with), csv_header() + "\n" + csv_row(with[0]) + "\n" + csv_row(with[1]) + "\n");
}

TEST(Model, KeysAndHashesSeparateModels) {
  ModelSpec a, b;
  b.lambda = 0.5;
  EXPECT_NE(model_key(a), model_key(b));
  EXPECT_NE(model_hash(a), model_hash(b));
  ModelSpec c;
  c.rows = 7;  // irrelevant for chains
  EXPECT_EQ(model_key(a), model_key(c));
  ModelSpec d;
  d.name = "ising-2d";
  d.rows = 2;
  d.cols = 3;
  EXPECT_EQ(build_model(d).sites, 6U);
}

TEST(OracleCache, StoresAndReuses) {
  TempDir dir;
  ModelSpec m;
  m.sites = 6;
  const double e = cached_oracle_energy(m, dir.path(), {});
  EXPECT_NEAR(e, ground_state_dense(build_model(m)).energy, 1e-12);
  ASSERT_EQ(std::distance(fs::directory_iterator(dir.path()), fs::directory_iterator()), 1);
  const fs::path file = fs::directory_iterator(dir.path())->path();
  // A stored value for the same key is returned as is.
  {
    std::ofstream o(file, std::ios::trunc);
    o << model_key(m) << "\n-42.5\n";
  }
  EXPECT_EQ(cached_oracle_energy(m, dir.path(), {}), -42.5);
  // A different key in the file is a miss.
  {
    std::ofstream o(file, std::ios::trunc);
    o << "something else\n-42.5\n";
  }
  EXPECT_NEAR(cached_oracle_energy(m, dir.path(), {}), e, 1e-12);
  Tolerances small;
  small.dense_site_cap = 4;
  EXPECT_THROW(cached_oracle_energy(m, dir.path() / "other", small), CapExceeded);
}

TEST(Execute, ExactMatchesLibrary) {
  TempDir dir;
  ExperimentConfig c;
  c.model.sites = 4;
  c.out = dir.path().string();
  c.validate = true;
  const auto out = execute(c);
  const double e0 = ground_state_dense(build_ising(4, 1.0, Boundary::open)).energy;
  EXPECT_EQ(out.summary["schema"], "qtn-summary/1");
  EXPECT_NEAR(out.summary["final_energy"].get<double>(), e0, 1e-12);
  EXPECT_EQ(out.summary["gap"].get<double>(), 0.0);
  EXPECT_TRUE(out.summary["validation"]["passed"].get<bool>());
  EXPECT_EQ(out.csv_name, "trace.csv");
}

TEST(Execute, SolversReportGapsAgainstOracle) {
  TempDir dir;
  ExperimentConfig c;
  c.out = dir.path().string();
  c.model.sites = 6;
  c.validate = true;
  c.sweeps = 5;
  for (Method m : {Method::mps_als, Method::parafac_als, Method::mixed_als}) {
    c.method = m;
    c.bond_dim = 2;
    c.schedule = "3,3|2,4";
    const auto out = execute(c);
    const double gap = out.summary["gap"].get<double>();
    EXPECT_GE(gap, -1e-10) << to_string(m);
    EXPECT_TRUE(out.summary["validation"]["passed"].get<bool>()) << to_string(m);
    EXPECT_EQ(out.summary["wall_time"].get<double>(), 0.0);
    EXPECT_EQ(out.csv.substr(0, csv_header().size()), csv_header());
  }
}

TEST(Execute, NoOracleAboveCap) {
  TempDir dir;
  ExperimentConfig c;
  c.method = Method::mps_als;
  c.out = dir.path().string();
  c.model.sites = 6;
  c.sweeps = 2;
  c.tol.dense_site_cap = 4;
  const auto out = execute(c);
  EXPECT_TRUE(out.summary["oracle_energy"].is_null());
  EXPECT_NE(out.csv.find(",,0,"), std::string::npos);  // empty abs_error
  c.validate = true;
  EXPECT_THROW(execute(c), CapExceeded);
}

TEST(Execute, PepsSweepEndsLossless) {
  TempDir dir;
  ExperimentConfig c;
  c.method = Method::peps_contract;
  c.out = dir.path().string();
  c.model.rows = 2;
  c.model.cols = 3;
  c.bond_dim = 2;
  c.d_cut = 4;
  const auto out = execute(c);
  EXPECT_EQ(out.csv_name, "peps.csv");
  const auto& last = out.summary["cuts"].back();
  EXPECT_LT(last["rel_deviation"].get<double>(), 1e-11);
}

TEST(Execute, ContractCheckPasses) {
  const auto checks = run_contract_check(20, 3);
  EXPECT_EQ(checks.size(), 8U);
  for (const auto& k : checks) {
    EXPECT_TRUE(k.passed) << k.kernel << " err " << k.max_rel_error << " cost " << k.max_cost_ratio;
    EXPECT_EQ(k.instances, 20U);
  }
}

TEST(Execute, RepeatIsByteIdenticalAndTimingIsOptIn) {
  TempDir dir;
  ExperimentConfig c;
  c.method = Method::parafac_als;
  c.out = dir.path().string();
  c.model.sites = 8;
  c.bond_dim = 2;
  c.sweeps = 5;
  const auto a = execute(c);
  const auto b = execute(c);
  EXPECT_EQ(a.csv, b.csv);
  EXPECT_EQ(a.summary.dump(), b.summary.dump());
  c.timing = true;
  const auto t = execute(c);
  EXPECT_GT(t.summary["wall_time"].get<double>(), 0.0);
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  const std::string out = dir.path().string();
  std::string o, e;
  EXPECT_EQ(cli({"exact", "--sites", "4", "--out", out}, &o, &e), exit_ok) << e;
  EXPECT_TRUE(fs::exists(dir.path() / "trace.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "summary.json"));
  EXPECT_EQ(cli({"exact", "--lambda", "abc", "--out", out}, &o, &e), exit_config);
  EXPECT_NE(e.find("--lambda"), std::string::npos);
  EXPECT_EQ(cli({"exact", "--no-such-flag"}, &o, &e), exit_config);
  EXPECT_EQ(cli({}, &o, &e), exit_config);
  EXPECT_EQ(cli({"mps-als", "--sites", "20", "--validate", "--out", out}, &o, &e), exit_cap);
  EXPECT_EQ(cli({"--help"}, &o, &e), exit_ok);
  EXPECT_NE(o.find("parafac-als"), std::string::npos);
  EXPECT_EQ(cli({"parafac-als", "--sites", "10", "--blocking", "5,4"}, &o, &e), exit_config);
  EXPECT_EQ(exit_code_for(SingularDenominator("x")), exit_solver);
  EXPECT_EQ(exit_code_for(NumericalError("x")), exit_solver);
  EXPECT_EQ(exit_code_for(std::runtime_error("x")), exit_other);
}

TEST(Cli, ConfigFileWithFlagOverrides) {
  TempDir dir;
  ExperimentConfig c;
  c.model.sites = 12;
  c.seed = 9;
  const fs::path cfg = dir.path() / "run.cfg";
  std::ofstream(cfg) << serialize_config(c);
  std::string o, e;
  ASSERT_EQ(cli({"mps-als", "--config", cfg.string(), "--sites", "5", "--set", "solver.sweeps=3", "--dump-config"},
                &o, &e),
            exit_ok)
      << e;
  const auto got = parse_config(o);
  EXPECT_EQ(got.method, Method::mps_als);
  EXPECT_EQ(got.model.sites, 5U);
  EXPECT_EQ(got.seed, 9U);
  EXPECT_EQ(got.sweeps, 3U);
  EXPECT_EQ(cli({"mps-als", "--set", "solver.nope=1"}, &o, &e), exit_config);
}

TEST(Reproduce, WorkerCountDoesNotChangeOutput) {
  TempDir one, two;
  ReproduceOptions opt;
  opt.modes = {"greedy", "simultaneous"};
  opt.ranks = {1, 2};
  opt.sweeps = 5;
  opt.out = one.path();
  const auto a = reproduce_figure(opt);
  opt.workers = 3;
  opt.out = two.path();
  opt.cache_dir = one.path() / "oracle-cache";
  const auto b = reproduce_figure(opt);
  ASSERT_EQ(a.cells.size(), 16U);
  EXPECT_EQ(read_file(one.path() / "manifest.json"), read_file(two.path() / "manifest.json"));
  for (const auto& cell : a.cells) {
    EXPECT_GE(cell.error, -1e-10);
    EXPECT_EQ(read_file(one.path() / cell.csv), read_file(two.path() / cell.csv)) << cell.csv;
  }
  opt.modes = {"sideways"};
  EXPECT_THROW(reproduce_figure(opt), ConfigError);
  EXPECT_THROW(figure_blockings("p11"), ConfigError);
}
