// SPDX-License-Identifier: Apache-2.0
//
// mcua: multi-connectivity user association and downlink power allocation
// experiments. Subcommands mirror the experiment kinds; see README.md.
#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "mcua/bench.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitSolverFailure = 3;
constexpr int kExitConfigError = 4;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  bool trace = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config file");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "override scenario seed");
  cmd->add_flag("--trace", args.trace, "write per-iteration trace CSVs");
}

mcua::ExperimentConfig resolve_config(const CommonArgs& args,
                                      mcua::ExperimentKind kind) {
  mcua::ExperimentConfig cfg = args.config_path.empty()
                                   ? mcua::default_config()
                                   : mcua::load_config(args.config_path);
  cfg.experiment.kind = kind;
  if (args.seed) cfg.scenario.seed = *args.seed;
  if (args.trace)
    cfg.solver.ccp.trace_path = args.out_dir + "/ccp_trace_inner.csv";
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint multi-connectivity user association and downlink power "
               "allocation in mmWave networks"};
  app.require_subcommand(1);

  CommonArgs solve_args, pareto_args, mc_args, assoc_args, cov_args;
  CLI::App* c_solve = app.add_subcommand("solve", "solve one instance end to end");
  add_common(c_solve, solve_args);
  CLI::App* c_pareto =
      app.add_subcommand("pareto", "sweep the weight simplex and record rates");
  add_common(c_pareto, pareto_args);
  CLI::App* c_mc = app.add_subcommand(
      "montecarlo", "random feasible solution clouds vs the optimized value");
  add_common(c_mc, mc_args);
  CLI::App* c_assoc = app.add_subcommand(
      "assoc-sweep", "mean rates vs the max associations allowed per user");
  add_common(c_assoc, assoc_args);
  CLI::App* c_cov = app.add_subcommand(
      "coverage-sweep", "mean rates vs the mBS coverage radius");
  add_common(c_cov, cov_args);

  CLI11_PARSE(app, argc, argv);

  try {
    nlohmann::json summary;
    if (c_solve->parsed()) {
      const auto cfg = resolve_config(solve_args, mcua::ExperimentKind::solve);
      summary = mcua::cmd_solve(cfg, solve_args.out_dir, solve_args.trace);
      std::cout << summary.dump(2) << "\n";
      return summary.value("status", "") == "infeasible" ? kExitInfeasible
                                                         : kExitOk;
    }
    if (c_pareto->parsed()) {
      const auto cfg = resolve_config(pareto_args, mcua::ExperimentKind::pareto);
      summary = mcua::cmd_pareto(cfg, pareto_args.out_dir);
    } else if (c_mc->parsed()) {
      const auto cfg = resolve_config(mc_args, mcua::ExperimentKind::montecarlo);
      summary = mcua::cmd_montecarlo(cfg, mc_args.out_dir);
    } else if (c_assoc->parsed()) {
      const auto cfg =
          resolve_config(assoc_args, mcua::ExperimentKind::assoc_sweep);
      summary = mcua::cmd_assoc_sweep(cfg, assoc_args.out_dir);
    } else if (c_cov->parsed()) {
      const auto cfg =
          resolve_config(cov_args, mcua::ExperimentKind::coverage_sweep);
      summary = mcua::cmd_coverage_sweep(cfg, cov_args.out_dir);
    }
    std::cout << summary.dump(2) << "\n";
    return kExitOk;
  } catch (const mcua::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const mcua::InfeasibleGeometryError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const mcua::InfeasibleInstanceError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const mcua::SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolverFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolverFailure;
  }
}
