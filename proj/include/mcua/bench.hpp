// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "mcua/baselines.hpp"
#include "mcua/ccp.hpp"
#include "mcua/recover.hpp"

namespace mcua {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScenarioBlock {
  int m = 5;
  int n = 10;
  double area_side_m = 100.0;
  double coverage_radius_m = std::numeric_limits<double>::infinity();
  FadingMode fading = FadingMode::deterministic_unit;
  std::uint64_t seed = 1;
  std::vector<Point2> mbs_xy;   // optional fixed coordinates
  std::vector<Point2> user_xy;  // optional fixed coordinates
  std::string from_file;        // load a serialized scenario verbatim
};

struct SolverBlock {
  CcpSettings ccp;
  RecoverySettings recovery;
};

struct InstanceBlock {
  int max_assoc = std::numeric_limits<int>::max();
  bool enforce_qos = true;
  std::vector<double> weights;  // empty = equal weights
};

enum class ExperimentKind { solve, pareto, montecarlo, assoc_sweep, coverage_sweep };

struct ExperimentBlock {
  ExperimentKind kind = ExperimentKind::solve;
  double weight_step = 0.01;                      // pareto
  std::vector<std::vector<double>> weight_grid;   // pareto override
  int draws = 10000;                              // montecarlo
  std::vector<int> n_list;                        // montecarlo / coverage
  std::vector<int> l_list;                        // assoc sweep
  std::vector<double> coverage_list;              // coverage sweep
  int repetitions = 100;
};

struct ExperimentConfig {
  ChannelParams channel;  // Table-I style defaults
  ScenarioBlock scenario;
  SolverBlock solver;
  InstanceBlock instance;
  ExperimentBlock experiment;
};

ExperimentConfig default_config();
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

Scenario make_scenario(const ExperimentConfig& cfg);
InstanceConfig make_instance(const ExperimentConfig& cfg, int n);

// One full pipeline run: feasible init, outer loop, integer recovery,
// residual checks. All reported rates are recomputed from (x, p).
struct PipelineResult {
  CcpStatus status = CcpStatus::converged;
  LiftedPoint relaxed;
  double relaxed_objective_bps = 0.0;
  double relaxed_sum_u_norm = 0.0;
  Solution integral;
  double integral_objective_bps = 0.0;
  std::vector<std::string> provenance;
  FeasibilityReport resource_check;  // C1..C5 + row cap on the integral point
  bool qos_met = false;
  CcpTrace trace;
};

PipelineResult solve_pipeline(const Scenario& scn, const InstanceConfig& icfg,
                              const SolverBlock& solver);

// Subcommand bodies. Each writes its CSV/JSON artifacts under out_dir and
// returns a summary document.
nlohmann::json cmd_solve(const ExperimentConfig& cfg, const std::string& out_dir,
                         bool write_trace);
nlohmann::json cmd_pareto(const ExperimentConfig& cfg, const std::string& out_dir);
nlohmann::json cmd_montecarlo(const ExperimentConfig& cfg,
                              const std::string& out_dir);
nlohmann::json cmd_assoc_sweep(const ExperimentConfig& cfg,
                               const std::string& out_dir);
nlohmann::json cmd_coverage_sweep(const ExperimentConfig& cfg,
                                  const std::string& out_dir);

}  // namespace mcua
