// SPDX-License-Identifier: Apache-2.0
#include "mcua/bench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include "mcua/serialize.hpp"

namespace mcua {

using nlohmann::json;
namespace fs = std::filesystem;

ExperimentConfig default_config() { return ExperimentConfig{}; }

namespace {

double radius_from(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf")
      return std::numeric_limits<double>::infinity();
    throw ConfigError("coverage_radius_m must be a number or \"inf\"");
  }
  return j.get<double>();
}

std::vector<Point2> points_from(const json& j) {
  std::vector<Point2> pts;
  for (const json& e : j) pts.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
  return pts;
}

ExperimentKind kind_from(const std::string& s) {
  if (s == "solve") return ExperimentKind::solve;
  if (s == "pareto") return ExperimentKind::pareto;
  if (s == "montecarlo") return ExperimentKind::montecarlo;
  if (s == "assoc_sweep" || s == "assoc-sweep") return ExperimentKind::assoc_sweep;
  if (s == "coverage_sweep" || s == "coverage-sweep")
    return ExperimentKind::coverage_sweep;
  throw ConfigError("unknown experiment kind: " + s);
}

std::ofstream open_csv(const std::string& out_dir, const std::string& name,
                       const std::string& schema, const std::string& header) {
  fs::create_directories(out_dir);
  std::ofstream os(fs::path(out_dir) / name);
  if (!os) throw std::runtime_error("cannot open " + name + " under " + out_dir);
  os << std::setprecision(12);
  os << "schema," << schema << "\n" << header << "\n";
  return os;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  try {
    ExperimentConfig cfg;
    if (j.contains("channel")) {
      const json& c = j.at("channel");
      ChannelParams& p = cfg.channel;
      p.bandwidth_hz = c.value("bandwidth_hz", p.bandwidth_hz);
      p.path_loss_exp = c.value("path_loss_exp", p.path_loss_exp);
      p.wavelength_m = c.value("wavelength_m", p.wavelength_m);
      p.noise_psd_dbm_per_hz = c.value("noise_psd_dbm_per_hz", p.noise_psd_dbm_per_hz);
      p.p_min_mw = c.value("p_min_mw", p.p_min_mw);
      p.p_max_mw = c.value("p_max_mw", p.p_max_mw);
      p.r_min_bps = c.value("r_min_bps", p.r_min_bps);
    }
    if (j.contains("scenario")) {
      const json& s = j.at("scenario");
      ScenarioBlock& b = cfg.scenario;
      b.m = s.value("m", b.m);
      b.n = s.value("n", b.n);
      b.area_side_m = s.value("area_side_m", b.area_side_m);
      if (s.contains("coverage_radius_m"))
        b.coverage_radius_m = radius_from(s.at("coverage_radius_m"));
      if (s.contains("fading")) {
        const std::string f = s.at("fading").get<std::string>();
        if (f == "deterministic")
          b.fading = FadingMode::deterministic_unit;
        else if (f == "exponential")
          b.fading = FadingMode::exponential_unit_mean;
        else
          throw ConfigError("fading must be deterministic or exponential");
      }
      b.seed = s.value("seed", b.seed);
      if (s.contains("mbs_xy")) b.mbs_xy = points_from(s.at("mbs_xy"));
      if (s.contains("user_xy")) b.user_xy = points_from(s.at("user_xy"));
      b.from_file = s.value("from_file", b.from_file);
    }
    if (j.contains("solver")) {
      const json& s = j.at("solver");
      CcpSettings& c = cfg.solver.ccp;
      c.tau = s.value("tau", c.tau);
      c.max_outer = s.value("max_outer", c.max_outer);
      if (s.contains("barrier")) {
        const json& b = s.at("barrier");
        BarrierSettings& bs = c.inner;
        bs.t0 = b.value("t0", bs.t0);
        bs.mu = b.value("mu", bs.mu);
        bs.eps_gap = b.value("eps_gap", bs.eps_gap);
        bs.newton_tol = b.value("newton_tol", bs.newton_tol);
        bs.max_newton = b.value("max_newton", bs.max_newton);
        bs.ls_alpha = b.value("ls_alpha", bs.ls_alpha);
        bs.ls_beta = b.value("ls_beta", bs.ls_beta);
      }
      if (s.contains("recovery")) {
        const json& r = s.at("recovery");
        RecoverySettings& rs = cfg.solver.recovery;
        rs.threshold = r.value("threshold", rs.threshold);
        rs.bnb_node_cap = r.value("bnb_node_cap", rs.bnb_node_cap);
        rs.reopt_power = r.value("reopt_power", rs.reopt_power);
      }
    }
    if (j.contains("instance")) {
      const json& s = j.at("instance");
      InstanceBlock& b = cfg.instance;
      if (s.contains("max_assoc")) {
        if (s.at("max_assoc").is_string()) {
          if (s.at("max_assoc").get<std::string>() != "unbounded")
            throw ConfigError("max_assoc must be an integer or \"unbounded\"");
        } else {
          b.max_assoc = s.at("max_assoc").get<int>();
        }
      }
      b.enforce_qos = s.value("enforce_qos", b.enforce_qos);
      if (s.contains("weights") && s.at("weights").is_array())
        b.weights = s.at("weights").get<std::vector<double>>();
    }
    if (j.contains("experiment")) {
      const json& s = j.at("experiment");
      ExperimentBlock& b = cfg.experiment;
      if (s.contains("kind")) b.kind = kind_from(s.at("kind").get<std::string>());
      b.weight_step = s.value("weight_step", b.weight_step);
      if (s.contains("weight_grid"))
        b.weight_grid = s.at("weight_grid").get<std::vector<std::vector<double>>>();
      b.draws = s.value("draws", b.draws);
      if (s.contains("n_list")) b.n_list = s.at("n_list").get<std::vector<int>>();
      if (s.contains("l_list")) b.l_list = s.at("l_list").get<std::vector<int>>();
      if (s.contains("coverage_list"))
        b.coverage_list = s.at("coverage_list").get<std::vector<double>>();
      b.repetitions = s.value("repetitions", b.repetitions);
    }
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return config_from_json(j);
}

Scenario make_scenario(const ExperimentConfig& cfg) {
  const ScenarioBlock& s = cfg.scenario;
  if (!s.from_file.empty()) {
    // Serialized scenarios carry their own channel and fading realization.
    try {
      Scenario scn = scenario_from_json(read_json_file(s.from_file));
      scn.placement.validate();
      return scn;
    } catch (const std::exception& e) {
      throw ConfigError("cannot load scenario from " + s.from_file + ": " +
                        e.what());
    }
  }
  Placement pl;
  if (!s.mbs_xy.empty() && !s.user_xy.empty()) {
    pl = generate_placement(static_cast<int>(s.mbs_xy.size()),
                            static_cast<int>(s.user_xy.size()), s.area_side_m,
                            s.coverage_radius_m, PlacementMode::fixed_list,
                            s.seed, s.mbs_xy, s.user_xy);
  } else if (!s.mbs_xy.empty()) {
    Placement base;
    base.mbs_xy = s.mbs_xy;
    base.area_side_m = s.area_side_m;
    base.coverage_radius_m = s.coverage_radius_m;
    pl = resample_users(base, s.n, s.seed);
  } else if (!s.user_xy.empty()) {
    throw ConfigError("user_xy without mbs_xy is not supported");
  } else {
    pl = generate_placement(s.m, s.n, s.area_side_m, s.coverage_radius_m,
                            PlacementMode::binomial_process, s.seed);
  }
  const FadingModel fading{s.fading, substream_seed(s.seed, 0xFAD)};
  return build_scenario(cfg.channel, pl, fading);
}

InstanceConfig make_instance(const ExperimentConfig& cfg, int n) {
  InstanceConfig icfg = equal_weight_config(n);
  if (!cfg.instance.weights.empty()) {
    if (static_cast<int>(cfg.instance.weights.size()) != n)
      throw ConfigError("weights length does not match user count");
    icfg.weights = Eigen::Map<const Eigen::VectorXd>(cfg.instance.weights.data(), n);
  }
  icfg.max_assoc = cfg.instance.max_assoc;
  icfg.enforce_qos = cfg.instance.enforce_qos;
  return icfg;
}

PipelineResult solve_pipeline(const Scenario& scn, const InstanceConfig& icfg,
                              const SolverBlock& solver) {
  PipelineResult r;
  CcpResult cr = run_ccp(scn, icfg, solver.ccp);
  r.status = cr.status;
  r.trace = std::move(cr.trace);
  if (r.status == CcpStatus::infeasible) return r;

  r.relaxed = std::move(cr.point);
  r.relaxed_objective_bps = weighted_objective(
      scn, icfg, Solution{r.relaxed.x, r.relaxed.p_mw, false});
  r.relaxed_sum_u_norm = r.trace.iters.back().sum_u_norm;

  RecoveryResult rec = round_and_repair(
      scn, icfg, Solution{r.relaxed.x, r.relaxed.p_mw, false}, solver.recovery);
  r.provenance = rec.provenance;
  Solution integral = std::move(rec.solution);

  if (solver.recovery.reopt_power) {
    integral = reoptimize_power(scn, icfg, integral.x, &integral.p_mw,
                                solver.ccp.inner);
    r.provenance.push_back("reopt-power");

    // The relaxed association mass is not a reliable rounding signal (the
    // lifted rate cap drops x, so the solver parks association mass on weak
    // columns). Rank integral candidates by the true objective instead:
    // the rounded point competes with channel-ranked k-connectivity
    // patterns, all with reoptimized powers.
    auto meets_floor = [&](const Solution& s) {
      return !icfg.enforce_qos ||
             (user_rates(scn, s.x, s.p_mw).array() >=
              scn.params.r_min_bps - 1e-6)
                 .all();
    };
    auto better = [&](double obj_a, bool qos_a, double obj_b, bool qos_b) {
      if (qos_a != qos_b) return qos_a;
      return obj_a > obj_b;
    };
    double best_obj = weighted_objective(scn, icfg, integral);
    bool best_qos = meets_floor(integral);
    std::string best_tag = "ccp-round";
    const int L = icfg.effective_max_assoc(scn.num_mbs());
    Eigen::MatrixXd prev_x;
    for (int k = 1; k <= L; ++k) {
      const Eigen::MatrixXd xk =
          nearest_association(scn, k, nullptr, AssocRank::channel);
      if (prev_x.size() && (xk - prev_x).cwiseAbs().maxCoeff() == 0) break;
      prev_x = xk;
      if ((xk - integral.x).cwiseAbs().maxCoeff() == 0) continue;
      const Solution cand =
          reoptimize_power(scn, icfg, xk, nullptr, solver.ccp.inner);
      const double obj = weighted_objective(scn, icfg, cand);
      const bool qos = meets_floor(cand);
      if (better(obj, qos, best_obj, best_qos)) {
        best_obj = obj;
        best_qos = qos;
        best_tag = "top" + std::to_string(k) + "-channel";
        integral = cand;
      }
    }
    // At desk scale a branch-and-bound over the association bits is
    // affordable and weight-aware; prefer its incumbent when it wins.
    int free_pairs = 0;
    const Eigen::MatrixXi forced = forced_association_fix(scn);
    for (int i = 0; i < scn.num_users(); ++i)
      for (int j = 0; j < scn.num_mbs(); ++j)
        if (scn.in_coverage(i, j) && forced(i, j) < 0) ++free_pairs;
    if (free_pairs <= 10) {
      try {
        const BnbResult bnb =
            branch_and_bound(scn, icfg, solver.recovery, solver.ccp);
        const bool qos = meets_floor(bnb.solution);
        if (better(bnb.objective_bps, qos, best_obj, best_qos)) {
          best_obj = bnb.objective_bps;
          best_qos = qos;
          best_tag = bnb.provenance;
          integral = bnb.solution;
        }
      } catch (const InfeasibleInstanceError&) {
      }
    }
    r.provenance.push_back("best-candidate:" + best_tag);
  }

  r.integral_objective_bps = weighted_objective(scn, icfg, integral);
  r.integral = std::move(integral);

  InstanceConfig chk = icfg;
  chk.enforce_qos = false;
  r.resource_check = check_op1(scn, chk, r.integral, 1e-6);
  const Eigen::VectorXd rates = user_rates(scn, r.integral.x, r.integral.p_mw);
  r.qos_met = (rates.array() >= scn.params.r_min_bps - 1e-6).all();
  return r;
}

json cmd_solve(const ExperimentConfig& cfg, const std::string& out_dir,
               bool write_trace) {
  fs::create_directories(out_dir);
  const Scenario scn = make_scenario(cfg);
  const InstanceConfig icfg = make_instance(cfg, scn.num_users());
  write_json_file((fs::path(out_dir) / "scenario.json").string(),
                  scenario_to_json(scn));

  const PipelineResult pr = solve_pipeline(scn, icfg, cfg.solver);
  json doc;
  if (pr.status == CcpStatus::infeasible) {
    doc["status"] = "infeasible";
    doc["reason"] = pr.trace.message.empty() ? "instance infeasible"
                                             : pr.trace.message;
    write_json_file((fs::path(out_dir) / "result.json").string(), doc);
    return doc;
  }

  doc["status"] = "ok";
  doc["ccp"] = {{"status", pr.status == CcpStatus::converged ? "converged"
                                                             : "max_outer"},
                {"iterations", pr.trace.iters.back().k},
                {"message", pr.trace.message}};
  doc["relaxed"] = {{"objective_bps", pr.relaxed_objective_bps},
                    {"sum_u_norm", pr.relaxed_sum_u_norm}};
  json viol = json::array();
  for (const Violation& v : pr.resource_check.violated)
    viol.push_back({{"constraint", v.constraint},
                    {"i", v.i},
                    {"j", v.j},
                    {"residual", v.residual}});
  doc["integral"] = {{"objective_bps", pr.integral_objective_bps},
                     {"provenance", pr.provenance},
                     {"resource_feasible", pr.resource_check.feasible()},
                     {"violations", viol},
                     {"qos_met", pr.qos_met}};
  const Eigen::VectorXd rates = user_rates(scn, pr.integral.x, pr.integral.p_mw);
  json jr = json::array();
  for (int i = 0; i < rates.size(); ++i) jr.push_back(rates(i));
  doc["per_user_rates_bps"] = jr;
  doc["association"] = matrix_to_json(pr.integral.x);
  doc["power_mw"] = matrix_to_json(pr.integral.p_mw);
  if (write_trace) {
    const std::string tp = (fs::path(out_dir) / "ccp_trace.csv").string();
    pr.trace.write_csv(tp);
    doc["trace_path"] = "ccp_trace.csv";
  }
  write_json_file((fs::path(out_dir) / "result.json").string(), doc);
  return doc;
}

namespace {

std::vector<std::vector<double>> pareto_weight_grid(const ExperimentConfig& cfg,
                                                    int n) {
  if (!cfg.experiment.weight_grid.empty()) {
    for (const auto& w : cfg.experiment.weight_grid)
      if (static_cast<int>(w.size()) != n)
        throw ConfigError("weight_grid entry length must equal user count");
    return cfg.experiment.weight_grid;
  }
  const double step = cfg.experiment.weight_step;
  if (!(step > 0 && step < 1)) throw ConfigError("weight_step must be in (0,1)");
  std::vector<std::vector<double>> grid;
  const int kmax = static_cast<int>(std::lround(1.0 / step));
  if (n == 2) {
    for (int k = 1; k < kmax; ++k) {
      const double a = k * step;
      grid.push_back({a, 1.0 - a});
    }
  } else if (n == 3) {
    for (int ka = 1; ka < kmax; ++ka) {
      for (int kb = 1; kb + ka < kmax; ++kb) {
        const double a = ka * step, b = kb * step;
        grid.push_back({a, b, 1.0 - a - b});
      }
    }
  } else {
    throw ConfigError("pareto sweep needs n in {2,3} or an explicit weight_grid");
  }
  return grid;
}

}  // namespace

json cmd_pareto(const ExperimentConfig& cfg, const std::string& out_dir) {
  const Scenario scn = make_scenario(cfg);
  const int n = scn.num_users();
  const auto grid = pareto_weight_grid(cfg, n);

  std::string header = "idx,status";
  for (int i = 0; i < n; ++i) header += ",w_" + std::to_string(i);
  for (int i = 0; i < n; ++i) header += ",relaxed_rate_" + std::to_string(i);
  for (int i = 0; i < n; ++i) header += ",integral_rate_" + std::to_string(i);
  header += ",most_balanced,max_total";
  std::ofstream os = open_csv(out_dir, "pareto.csv", "mcua.pareto.v1", header);

  struct Row {
    std::string status;
    Eigen::VectorXd relaxed_rates, integral_rates;
  };
  std::vector<Row> rows(grid.size());

  for (std::size_t g = 0; g < grid.size(); ++g) {
    InstanceConfig icfg = make_instance(cfg, n);
    icfg.weights = Eigen::Map<const Eigen::VectorXd>(grid[g].data(), n);
    Row& row = rows[g];
    try {
      const PipelineResult pr = solve_pipeline(scn, icfg, cfg.solver);
      if (pr.status == CcpStatus::infeasible) {
        row.status = "infeasible";
      } else {
        row.status = "ok";
        row.relaxed_rates = user_rates(scn, pr.relaxed.x, pr.relaxed.p_mw);
        row.integral_rates = user_rates(scn, pr.integral.x, pr.integral.p_mw);
      }
    } catch (const SolverFailure&) {
      row.status = "solver-failure";
    }
  }

  int balanced = -1, max_total = -1;
  double best_spread = std::numeric_limits<double>::infinity();
  double best_total = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < rows.size(); ++g) {
    if (rows[g].status != "ok") continue;
    const Eigen::VectorXd& r = rows[g].integral_rates;
    const double spread = r.maxCoeff() - r.minCoeff();
    if (spread < best_spread) {
      best_spread = spread;
      balanced = static_cast<int>(g);
    }
    if (r.sum() > best_total) {
      best_total = r.sum();
      max_total = static_cast<int>(g);
    }
  }

  int ok = 0;
  for (std::size_t g = 0; g < rows.size(); ++g) {
    const Row& row = rows[g];
    os << g << "," << row.status;
    for (int i = 0; i < n; ++i) os << "," << grid[g][i];
    for (int i = 0; i < n; ++i)
      os << "," << (row.status == "ok" ? row.relaxed_rates(i) : 0.0);
    for (int i = 0; i < n; ++i)
      os << "," << (row.status == "ok" ? row.integral_rates(i) : 0.0);
    os << "," << (static_cast<int>(g) == balanced ? 1 : 0) << ","
       << (static_cast<int>(g) == max_total ? 1 : 0) << "\n";
    if (row.status == "ok") ++ok;
  }

  return json{{"rows", grid.size()},
              {"ok", ok},
              {"most_balanced_idx", balanced},
              {"max_total_idx", max_total},
              {"csv", "pareto.csv"}};
}

json cmd_montecarlo(const ExperimentConfig& cfg, const std::string& out_dir) {
  const int m = cfg.scenario.m;
  std::vector<int> n_list = cfg.experiment.n_list;
  if (n_list.empty()) n_list = {cfg.scenario.n};

  std::ofstream summary = open_csv(
      out_dir, "montecarlo_summary.csv", "mcua.montecarlo-summary.v1",
      "n,m,draws,sample_max_bps,sample_mean_bps,optimized_relaxed_bps,"
      "optimized_integral_bps");
  json scenarios = json::array();

  for (std::size_t idx = 0; idx < n_list.size(); ++idx) {
    const int n = n_list[idx];
    const Placement pl = generate_placement(
        m, n, cfg.scenario.area_side_m, cfg.scenario.coverage_radius_m,
        PlacementMode::binomial_process,
        substream_seed(cfg.scenario.seed, 10 + idx));
    const FadingModel fading{cfg.scenario.fading,
                             substream_seed(cfg.scenario.seed, 90 + idx)};
    const Scenario scn = build_scenario(cfg.channel, pl, fading);
    const InstanceConfig icfg = make_instance(cfg, n);

    const PipelineResult pr = solve_pipeline(scn, icfg, cfg.solver);
    if (pr.status == CcpStatus::infeasible)
      throw InfeasibleInstanceError("montecarlo scenario n=" + std::to_string(n) +
                                    " infeasible");

    const std::string name =
        "montecarlo_samples_n" + std::to_string(n) + "_m" + std::to_string(m) + ".csv";
    std::ofstream os = open_csv(out_dir, name, "mcua.montecarlo-samples.v1",
                                "draw,objective_bps,meets_qos");
    double smax = -std::numeric_limits<double>::infinity();
    double ssum = 0.0;
    random_feasible(scn, icfg, cfg.experiment.draws,
                    substream_seed(cfg.scenario.seed, 20 + idx),
                    [&](int d, const SampleDraw& s) {
                      os << d << "," << s.objective_bps << ","
                         << (s.meets_qos ? 1 : 0) << "\n";
                      smax = std::max(smax, s.objective_bps);
                      ssum += s.objective_bps;
                    });
    const double smean =
        cfg.experiment.draws > 0 ? ssum / cfg.experiment.draws : 0.0;
    if (cfg.experiment.draws == 0) smax = 0.0;

    summary << n << "," << m << "," << cfg.experiment.draws << "," << smax
            << "," << smean << "," << pr.relaxed_objective_bps << ","
            << pr.integral_objective_bps << "\n";
    scenarios.push_back({{"n", n},
                         {"m", m},
                         {"sample_max_bps", smax},
                         {"sample_mean_bps", smean},
                         {"optimized_relaxed_bps", pr.relaxed_objective_bps},
                         {"optimized_integral_bps", pr.integral_objective_bps},
                         {"samples_csv", name}});
  }
  return json{{"scenarios", scenarios}, {"summary_csv", "montecarlo_summary.csv"}};
}

json cmd_assoc_sweep(const ExperimentConfig& cfg, const std::string& out_dir) {
  const int m = cfg.scenario.m;
  const int n = cfg.scenario.n;
  const int reps = cfg.experiment.repetitions;
  if (reps < 1) throw ConfigError("repetitions must be >= 1");
  std::vector<int> l_list = cfg.experiment.l_list;
  if (l_list.empty())
    for (int L = 1; L <= m; ++L) l_list.push_back(L);

  const Placement base = generate_placement(
      m, n, cfg.scenario.area_side_m, cfg.scenario.coverage_radius_m,
      PlacementMode::binomial_process, substream_seed(cfg.scenario.seed, 0));

  std::vector<Scenario> scns;
  scns.reserve(reps);
  for (int r = 0; r < reps; ++r) {
    const Placement pl =
        resample_users(base, n, substream_seed(cfg.scenario.seed, 1000 + r));
    const FadingModel fading{cfg.scenario.fading,
                             substream_seed(cfg.scenario.seed, 5000 + r)};
    scns.push_back(build_scenario(cfg.channel, pl, fading));
  }

  std::ofstream os =
      open_csv(out_dir, "assoc_sweep.csv", "mcua.assoc-sweep.v1",
               "L,mean_mcua_total_bps,mean_pop_total_bps,reps_ok,reps_failed");
  json rows = json::array();
  for (int L : l_list) {
    double mcua_sum = 0.0, pop_sum = 0.0;
    int ok = 0, failed = 0;
    for (int r = 0; r < reps; ++r) {
      InstanceConfig icfg = make_instance(cfg, n);
      icfg.max_assoc = L;
      try {
        const PipelineResult pr = solve_pipeline(scns[r], icfg, cfg.solver);
        if (pr.status == CcpStatus::infeasible) {
          ++failed;
          continue;
        }
        const Solution pop = pop_ua_pa(scns[r], icfg, L);
        mcua_sum += user_rates(scns[r], pr.integral.x, pr.integral.p_mw).sum();
        pop_sum += user_rates(scns[r], pop.x, pop.p_mw).sum();
        ++ok;
      } catch (const SolverFailure&) {
        ++failed;
      } catch (const InfeasibleInstanceError&) {
        ++failed;
      }
    }
    const double mcua_mean = ok > 0 ? mcua_sum / ok : 0.0;
    const double pop_mean = ok > 0 ? pop_sum / ok : 0.0;
    os << L << "," << mcua_mean << "," << pop_mean << "," << ok << ","
       << failed << "\n";
    rows.push_back({{"L", L},
                    {"mean_mcua_total_bps", mcua_mean},
                    {"mean_pop_total_bps", pop_mean},
                    {"reps_ok", ok},
                    {"reps_failed", failed}});
  }
  return json{{"rows", rows}, {"csv", "assoc_sweep.csv"}};
}

json cmd_coverage_sweep(const ExperimentConfig& cfg, const std::string& out_dir) {
  const int m = cfg.scenario.m;
  const int reps = cfg.experiment.repetitions;
  if (reps < 1) throw ConfigError("repetitions must be >= 1");
  if (cfg.experiment.coverage_list.empty())
    throw ConfigError("coverage_sweep needs a coverage_list");
  std::vector<int> n_list = cfg.experiment.n_list;
  if (n_list.empty()) n_list = {cfg.scenario.n};

  const Placement base = generate_placement(
      m, 1, cfg.scenario.area_side_m,
      std::numeric_limits<double>::infinity(), PlacementMode::binomial_process,
      substream_seed(cfg.scenario.seed, 0));

  std::ofstream os =
      open_csv(out_dir, "coverage_sweep.csv", "mcua.coverage-sweep.v1",
               "coverage_radius_m,n,mean_total_bps,reps_ok,reps_failed");
  json rows = json::array();
  for (std::size_t ri = 0; ri < cfg.experiment.coverage_list.size(); ++ri) {
    const double radius = cfg.experiment.coverage_list[ri];
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
      const int n = n_list[ni];
      double total = 0.0;
      int ok = 0, failed = 0;
      for (int r = 0; r < reps; ++r) {
        const std::uint64_t sub = substream_seed(
            cfg.scenario.seed,
            100 + (ri * n_list.size() + ni) * static_cast<std::size_t>(reps) + r);
        try {
          Placement pl = base;
          pl.coverage_radius_m = radius;
          pl = resample_users(pl, n, sub);
          const FadingModel fading{cfg.scenario.fading,
                                   substream_seed(sub, 7)};
          const Scenario scn = build_scenario(cfg.channel, pl, fading);
          const InstanceConfig icfg = make_instance(cfg, n);
          const PipelineResult pr = solve_pipeline(scn, icfg, cfg.solver);
          if (pr.status == CcpStatus::infeasible) {
            ++failed;
            continue;
          }
          total += user_rates(scn, pr.integral.x, pr.integral.p_mw).sum();
          ++ok;
        } catch (const InfeasibleGeometryError&) {
          ++failed;
        } catch (const InfeasibleInstanceError&) {
          ++failed;
        } catch (const SolverFailure&) {
          ++failed;
        }
      }
      const double mean = ok > 0 ? total / ok : 0.0;
      os << radius << "," << n << "," << mean << "," << ok << "," << failed
         << "\n";
      rows.push_back({{"coverage_radius_m", radius},
                      {"n", n},
                      {"mean_total_bps", mean},
                      {"reps_ok", ok},
                      {"reps_failed", failed}});
    }
  }
  return json{{"rows", rows}, {"csv", "coverage_sweep.csv"}};
}

}  // namespace mcua
