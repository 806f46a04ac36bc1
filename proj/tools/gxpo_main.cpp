// Command-line front end: verification suites, toy RLVR training, and
// alpha x K sweeps, all emitting CSV artifacts.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "gxpo/commands.hpp"
#include "gxpo/run_config.hpp"
#include "gxpo/suites.hpp"

int main(int argc, char** argv) {
  CLI::App app{"gxpo: extrapolated-lookahead policy updates and their verification suites"};
  app.require_subcommand(1);

  std::string suite = "all";
  std::string verify_out = "verify_out";
  auto* verify = app.add_subcommand("verify", "run a verification suite");
  verify->add_option("suite,--suite", suite,
                     "exactness|bounds|bias|alignment|budget|gate|gradcheck|all");
  verify->add_option("--out", verify_out, "output directory for CSV rows");

  std::string config_path;
  std::string out_override;
  long seed_override = -1;
  auto* train = app.add_subcommand("train", "train per a key=value config file");
  train->add_option("--config", config_path, "config file")->required();
  train->add_option("--out", out_override, "override output directory");
  train->add_option("--seed", seed_override, "run a single seed");

  std::string sweep_config;
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep", "train an alpha x K grid");
  sweep->add_option("--config", sweep_config, "config file with sweep_alpha/sweep_k")
      ->required();
  sweep->add_option("--out", sweep_out, "override output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (verify->parsed()) {
      return gxpo::cmd_verify(suite, verify_out);
    }
    if (train->parsed()) {
      gxpo::RunConfig cfg = gxpo::parse_run_config_file(config_path);
      if (!out_override.empty()) cfg.out_dir = out_override;
      if (seed_override >= 0) cfg.seeds = {static_cast<std::uint64_t>(seed_override)};
      return gxpo::cmd_train(cfg);
    }
    if (sweep->parsed()) {
      gxpo::RunConfig cfg = gxpo::parse_run_config_file(sweep_config);
      if (!sweep_out.empty()) cfg.out_dir = sweep_out;
      return gxpo::cmd_sweep(cfg);
    }
  } catch (const gxpo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
