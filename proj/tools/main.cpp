#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "minmarg/experiment.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
};

minmarg::ExperimentConfig load(const CommonOptions& opts) {
  std::optional<std::string> out;
  if (!opts.out_dir.empty()) out = opts.out_dir;
  return minmarg::load_config(opts.config_path, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Minimal p-norm densities with prescribed marginals: solver, "
      "verification and payoff decomposition"};
  app.require_subcommand(1);

  CommonOptions solve_opts, sweep_opts, verify_opts;
  bool inject_corruption = false;
  std::string payoff_path, decompose_out = ".";
  double k0_value = 0.0;

  auto add_common = [](CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config JSON")
        ->required();
    cmd->add_option("--out", opts.out_dir,
                    "output directory (overrides out_dir in the config)");
  };

  CLI::App* solve =
      app.add_subcommand("solve", "solve at a single exponent and write "
                                  "potentials CSV + summary JSON");
  add_common(solve, solve_opts);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "continuation sweep over p_targets; per-target CSVs plus a "
               "long-format CSV and JSON index");
  add_common(sweep, sweep_opts);

  CLI::App* verify = app.add_subcommand(
      "verify", "run attainment, duality, minimality and oracle checks");
  add_common(verify, verify_opts);
  verify
      ->add_flag("--inject-corruption", inject_corruption,
                 "perturb the solved potentials before checking (negative "
                 "control; forces failing checks)")
      ->group("");

  CLI::App* decompose = app.add_subcommand(
      "decompose", "static bond/forward/put/call replication of a tabulated "
                   "payoff");
  decompose->add_option("--payoff", payoff_path, "payoff CSV (strike,value)")
      ->required();
  CLI::Option* k0_opt =
      decompose->add_option("--k0", k0_value,
                            "put/call split strike (default: grid midpoint)");
  decompose->add_option("--out", decompose_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (solve->parsed()) return minmarg::run_solve(load(solve_opts));
    if (sweep->parsed()) return minmarg::run_sweep(load(sweep_opts));
    if (verify->parsed())
      return minmarg::run_verify(load(verify_opts), inject_corruption);
    if (decompose->parsed()) {
      std::optional<double> k0;
      if (k0_opt->count() > 0) k0 = k0_value;
      return minmarg::run_decompose(payoff_path, k0, decompose_out);
    }
  } catch (const minmarg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
