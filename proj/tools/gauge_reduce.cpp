#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gauge_reduce/commands.hpp"

namespace {

struct CommonOptions {
  std::string config;
  std::string output_dir;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config, "key=value config file (defaults apply to missing keys)");
  cmd->add_option("-o,--output-dir", o.output_dir, "directory for the CSV output (overrides output.dir)");
  cmd->add_option("-s,--set", o.overrides, "override a config key, e.g. --set lattice.n=3");
}

gauge_reduce::RunConfig resolve(const CommonOptions& o) {
  gauge_reduce::KeyValueConfig kv =
      o.config.empty() ? gauge_reduce::KeyValueConfig{} : gauge_reduce::KeyValueConfig::load(o.config);
  for (const auto& a : o.overrides) kv.set_assignment(a);
  if (!o.output_dir.empty()) kv.set("output.dir", o.output_dir);
  return gauge_reduce::RunConfig::from(kv);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace gauge_reduce;
  CLI::App app{"Gauge reduction of a lattice U(1) gauge-Higgs model: invariant checks, reduction Jacobian, "
               "Feynman-Kac simulation and oracle comparison"};
  app.set_version_flag("--version", std::string("gauge_reduce ") + kVersion);
  app.require_subcommand(1);

  CommonOptions opts;
  std::string field_file;
  auto* check = app.add_subcommand("check", "run the invariant suite, write check.csv");
  auto* jacobian = app.add_subcommand("jacobian", "reduction Jacobian at one f~, write jacobian.csv");
  auto* simulate = app.add_subcommand("simulate", "Feynman-Kac estimate, write simulate.csv");
  auto* compare = app.add_subcommand("compare-oracle", "Monte Carlo against a reference, write compare_oracle.csv");
  for (auto* c : {check, jacobian, simulate, compare}) add_common(c, opts);
  jacobian->add_option("-f,--field", field_file, "field file holding f~ (overrides jacobian.field)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  RunConfig cfg;
  try {
    cfg = resolve(opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (check->parsed()) return cmd_check(cfg, std::cerr);
    if (jacobian->parsed()) {
      return cmd_jacobian(cfg, field_file.empty() ? std::nullopt : std::optional<std::string>(field_file), std::cerr);
    }
    if (simulate->parsed()) return cmd_simulate(cfg, std::cerr);
    if (compare->parsed()) return cmd_compare_oracle(cfg, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SingularOrbitMetric& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
