#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "gauge_reduce/commands.hpp"
#include "oracles.hpp"

using namespace gauge_reduce;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("gauge_reduce_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig make(const std::string& text, const fs::path& out) {
  KeyValueConfig kv = KeyValueConfig::parse(text);
  kv.set("output.dir", out.string());
  return RunConfig::from(kv);
}

/// Fields of the last data row.
std::vector<std::string> last_row(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) last = line;
  }
  std::vector<std::string> out;
  std::stringstream ls(last);
  std::string cell;
  while (std::getline(ls, cell, ',')) out.push_back(cell);
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GAUGE_REDUCE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  KeyValueConfig kv;
  EXPECT_EQ(kv.integer("lattice.n"), 4);
  kv.set_assignment("lattice.n = 3");
  EXPECT_EQ(kv.integer("lattice.n"), 3);
  EXPECT_THROW(kv.set_assignment("lattice.n"), ConfigError);
  EXPECT_THROW(kv.set("lattice.size", "3"), ConfigError);
  EXPECT_THROW(kv.set("sde.n_paths", "-4"), ConfigError);
  EXPECT_THROW(kv.set("simulate.process", "quantum"), ConfigError);
  EXPECT_THROW(kv.set("check.corrupt_projector", "maybe"), ConfigError);
}

TEST(Config, ParseErrorsNameTheLine) {
  try {
    KeyValueConfig::parse("lattice.n = 3\nlattice.nn = 4\n", "demo.conf");
    FAIL() << "unknown key accepted";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("demo.conf:2"), std::string::npos);
  }
  EXPECT_THROW(KeyValueConfig::parse("lattice.n = 3\nlattice.n = 4\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::parse("just words\n"), ConfigError);
  EXPECT_THROW(RunConfig::from(KeyValueConfig::parse("lattice.n = 1\n")), ConfigError);
  EXPECT_THROW(RunConfig::from(KeyValueConfig::parse("lattice.dim = 3\nlattice.n = 9\n")), ConfigError);
  EXPECT_THROW(RunConfig::from(KeyValueConfig::parse("oracle.grid_points = 100\n")), ConfigError);
  EXPECT_THROW(RunConfig::from(KeyValueConfig::parse("simulate.potential = effective\n")), ConfigError);
}

TEST(Config, HashIgnoresFormattingAndOutputDir) {
  const auto a = KeyValueConfig::parse("lattice.n=3\nmodel.g0 = 0.5 # comment\n");
  const auto b = KeyValueConfig::parse("# header\n  model.g0=5e-1\n\nlattice.n =   3\noutput.dir = /tmp/elsewhere\n");
  EXPECT_EQ(a.hash(), b.hash());
  const auto c = KeyValueConfig::parse("lattice.n=3\nmodel.g0 = 0.6\n");
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Csv, EscapingAndNumbers) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_real(0.1), "0.10000000000000001");
  EXPECT_EQ(csv_real(std::nan("")), "nan");
  EXPECT_EQ(csv_real(-INFINITY), "-inf");
  CsvTable t("note", {"x", "y"});
  t.add_row({"1", "two, three"});
  EXPECT_EQ(t.str(), "# note\r\nx,y\r\n1,\"two, three\"\r\n");
  EXPECT_THROW(t.add_row({"1"}), std::logic_error);
}

TEST(Commands, CheckPassesAndCatchesCorruptProjector) {
  const fs::path d = scratch_dir("check");
  std::ostringstream log;
  EXPECT_EQ(cmd_check(make("lattice.dim = 2\nlattice.n = 3\ncheck.trials = 3\n", d), log), kExitOk) << log.str();
  const std::string csv = slurp(d / "check.csv");
  EXPECT_EQ(csv.rfind("# gauge_reduce ", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2 + 16);
  EXPECT_EQ(csv.find("false"), std::string::npos);
  EXPECT_EQ(cmd_check(make("lattice.dim = 2\nlattice.n = 3\ncheck.trials = 3\ncheck.corrupt_projector = true\n", d), log),
            kExitFailure);
  EXPECT_NE(slurp(d / "check.csv").find("projector_idempotent,"), std::string::npos);
}

TEST(Commands, JacobianOnTwoSitesMatchesClosedForm) {
  const fs::path d = scratch_dir("jacobian");
  std::ostringstream log;
  const RunConfig cfg = make("lattice.dim = 1\nlattice.n = 2\njacobian.field = uniform\njacobian.amplitude = 1\n", d);
  ASSERT_EQ(cmd_jacobian(cfg, std::nullopt, log), kExitOk);
  const std::string first = slurp(d / "jacobian.csv");
  const auto row = last_row(first);
  ASSERT_EQ(row.size(), 11u);
  EXPECT_EQ(row[0], "uniform");
  EXPECT_NEAR(std::stod(row[8]), oracle::two_site_jacobian(1.0, 1.0, 1.0).J, 1e-12);
  EXPECT_EQ(row[10], "ok");
  ASSERT_EQ(cmd_jacobian(cfg, std::nullopt, log), kExitOk);
  EXPECT_EQ(slurp(d / "jacobian.csv"), first);
}

TEST(Commands, JacobianFromFieldFileAndSingularField) {
  const fs::path d = scratch_dir("jacobian_file");
  const Lattice lat({1, 3, 1.0});
  SiteDoublet f = SiteDoublet::zeros(lat);
  {
    std::ofstream out(d / "zero.field");
    out << format_field_file(lat, f);
  }
  std::ostringstream log;
  const RunConfig cfg = make("lattice.dim = 1\nlattice.n = 3\n", d);
  EXPECT_EQ(cmd_jacobian(cfg, (d / "zero.field").string(), log), kExitFailure);
  const auto row = last_row(slurp(d / "jacobian.csv"));
  EXPECT_EQ(row.back(), "singular_orbit_metric");
  EXPECT_EQ(row[8], "nan");

  f[0] = 0.5;
  f[3] = -0.25;
  {
    std::ofstream out(d / "some.field");
    out << format_field_file(lat, f);
  }
  EXPECT_EQ(cmd_jacobian(cfg, (d / "some.field").string(), log), kExitOk);
  EXPECT_EQ(last_row(slurp(d / "jacobian.csv")).back(), "ok");
  EXPECT_THROW(cmd_jacobian(make("lattice.dim = 1\nlattice.n = 4\n", d), (d / "some.field").string(), log),
               ConfigError);
}

TEST(Commands, SimulateTrivialObservable) {
  const fs::path d = scratch_dir("simulate");
  std::ostringstream log;
  const RunConfig cfg = make("lattice.dim = 1\nlattice.n = 3\nsde.n_paths = 50\nsde.n_steps = 10\n", d);
  ASSERT_EQ(cmd_simulate(cfg, log), kExitOk);
  const auto row = last_row(slurp(d / "simulate.csv"));
  ASSERT_EQ(row.size(), 13u);
  EXPECT_EQ(row[6], "1");
  EXPECT_EQ(row[7], "0");
  EXPECT_EQ(row[12], "true");
}

TEST(Commands, SimulateReducedWithEffectivePotential) {
  const fs::path d = scratch_dir("simulate_reduced");
  std::ostringstream log;
  const RunConfig cfg = make(
      "lattice.dim = 1\nlattice.n = 3\nsde.n_paths = 40\nsde.n_steps = 5\nsde.dt = 0.01\n"
      "simulate.process = reduced\nsimulate.potential = effective\nsimulate.observable = f2\n",
      d);
  EXPECT_EQ(cmd_simulate(cfg, log), kExitOk) << log.str();
  EXPECT_EQ(last_row(slurp(d / "simulate.csv"))[12], "true");
}

TEST(Commands, SimulateFlagsOverflowingWeights) {
  const fs::path d = scratch_dir("simulate_flag");
  std::ostringstream log;
  const RunConfig cfg = make(
      "lattice.dim = 1\nlattice.n = 2\nsde.n_paths = 10\nsde.n_steps = 10\nsde.dt = 0.1\n"
      "simulate.potential = constant\nsimulate.constant = 1000\n",
      d);
  EXPECT_EQ(cmd_simulate(cfg, log), kExitFailure);
  EXPECT_EQ(last_row(slurp(d / "simulate.csv"))[12], "false");
}

TEST(Commands, CompareOracleToysPass) {
  const fs::path d = scratch_dir("compare");
  std::ostringstream log;
  EXPECT_EQ(cmd_compare_oracle(make("sde.n_paths = 20000\nsde.n_steps = 500\n", d), log), kExitOk) << log.str();
  EXPECT_EQ(last_row(slurp(d / "compare_oracle.csv")).back(), "PASS");
  EXPECT_EQ(cmd_compare_oracle(make("oracle.toy = girsanov\nlattice.dim = 1\nlattice.n = 2\n"
                                    "sde.n_paths = 20000\nsde.n_steps = 50\nsde.dt = 0.01\n",
                                    d),
                               log),
            kExitOk)
      << log.str();
  EXPECT_EQ(last_row(slurp(d / "compare_oracle.csv")).back(), "PASS");
}

TEST(Binary, ExitCodes) {
  const fs::path d = scratch_dir("binary");
  const std::string out = " -o " + d.string();
  EXPECT_EQ(run_cli("--version"), 0);
  EXPECT_EQ(run_cli("check" + out + " -s lattice.n=1"), 2);
  EXPECT_EQ(run_cli("check" + out + " --no-such-flag"), 2);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("check" + out + " -c " + (d / "missing.conf").string()), 2);
  EXPECT_EQ(run_cli("check" + out + " -s lattice.dim=1 -s lattice.n=3 -s check.trials=2"), 0);
  EXPECT_TRUE(fs::exists(d / "check.csv"));
  EXPECT_EQ(run_cli("jacobian" + out + " -s lattice.dim=1 -s lattice.n=2 -s jacobian.amplitude=0 -s jacobian.field=uniform"), 1);
}
