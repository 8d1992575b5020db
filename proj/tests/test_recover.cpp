// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "mcua/recover.hpp"
#include "oracles.hpp"

using namespace mcua;

TEST_SUITE("recover") {

TEST_CASE("clean rounding keeps the dominant entries") {
  const Scenario scn = oracle::random_scenario(2, 2, 101);
  InstanceConfig cfg = equal_weight_config(2);
  Solution relaxed;
  relaxed.x.resize(2, 2);
  relaxed.x << 0.9, 0.1, 0.2, 0.8;
  relaxed.p_mw = Eigen::MatrixXd::Constant(2, 2, 400.0);
  const RecoveryResult rr = round_and_repair(scn, cfg, relaxed);
  CHECK(rr.solution.x(0, 0) == 1.0);
  CHECK(rr.solution.x(0, 1) == 0.0);
  CHECK(rr.solution.x(1, 0) == 0.0);
  CHECK(rr.solution.x(1, 1) == 1.0);
  CHECK(rr.solution.integral);
}

TEST_CASE("an all-below-threshold row takes its largest entry") {
  const Scenario scn = oracle::random_scenario(2, 3, 103);
  InstanceConfig cfg = equal_weight_config(2);
  Solution relaxed;
  relaxed.x.resize(2, 3);
  relaxed.x << 0.2, 0.1, 0.4, 0.9, 0.8, 0.1;
  relaxed.p_mw = Eigen::MatrixXd::Constant(2, 3, 200.0);
  const RecoveryResult rr = round_and_repair(scn, cfg, relaxed);
  CHECK(rr.solution.x(0, 2) == 1.0);  // 0.4 wins the empty row
  CHECK(rr.repaired);
}

TEST_CASE("overloaded column powers scale by the exact ratio") {
  ChannelParams params;
  Placement pl;
  pl.mbs_xy = {{50.0, 50.0}};
  pl.user_xy = {{50.0, 60.0}, {50.0, 40.0}};
  const Scenario scn =
      build_scenario(params, pl, {FadingMode::deterministic_unit, 0});
  InstanceConfig cfg = equal_weight_config(2);
  Solution relaxed;
  relaxed.x = Eigen::MatrixXd::Ones(2, 1);
  relaxed.p_mw = Eigen::MatrixXd::Constant(2, 1, 600.0);
  const RecoveryResult rr = round_and_repair(scn, cfg, relaxed);
  CHECK(rr.solution.p_mw(0, 0) == doctest::Approx(500.0).epsilon(1e-12));
  CHECK(rr.solution.p_mw(1, 0) == doctest::Approx(500.0).epsilon(1e-12));
}

TEST_CASE("repair output is always resource feasible") {
  for (std::uint64_t seed : {5ull, 6ull, 7ull, 8ull}) {
    const Scenario scn = oracle::random_scenario(6, 3, seed, true);
    InstanceConfig cfg = equal_weight_config(6);
    cfg.enforce_qos = false;
    cfg.max_assoc = 2;
    const CcpResult cr = run_ccp(scn, cfg, CcpSettings{});
    REQUIRE(cr.status == CcpStatus::converged);
    const RecoveryResult rr = round_and_repair(
        scn, cfg, Solution{cr.point.x, cr.point.p_mw, false});
    const auto rep = check_op1(scn, cfg, rr.solution, 1e-9);
    CHECK(rep.feasible());
  }
}

TEST_CASE("dedicated mBSs saturate their single link") {
  ChannelParams params;
  Placement pl;
  pl.mbs_xy = {{20.0, 50.0}, {80.0, 50.0}};
  pl.user_xy = {{25.0, 50.0}, {75.0, 50.0}};
  const Scenario scn =
      build_scenario(params, pl, {FadingMode::deterministic_unit, 0});
  InstanceConfig cfg = equal_weight_config(2);
  cfg.enforce_qos = false;
  Eigen::MatrixXd x = Eigen::MatrixXd::Identity(2, 2);
  const Solution sol = reoptimize_power(scn, cfg, x);
  CHECK(sol.p_mw(0, 0) >= 0.999 * 1000.0);
  CHECK(sol.p_mw(1, 1) >= 0.999 * 1000.0);
}

TEST_CASE("symmetric users split one mBS evenly") {
  ChannelParams params;
  Placement pl;
  pl.mbs_xy = {{50.0, 50.0}};
  pl.user_xy = {{50.0, 60.0}, {50.0, 40.0}};
  const Scenario scn =
      build_scenario(params, pl, {FadingMode::deterministic_unit, 0});
  InstanceConfig cfg = equal_weight_config(2);
  cfg.enforce_qos = false;
  const Solution sol =
      reoptimize_power(scn, cfg, Eigen::MatrixXd::Ones(2, 1));
  CHECK(sol.p_mw(0, 0) == doctest::Approx(500.0).epsilon(1e-4));
  CHECK(sol.p_mw(1, 0) == doctest::Approx(500.0).epsilon(1e-4));
}

TEST_CASE("uneven channels reproduce the water-filling split") {
  // One mBS, two users at distances giving c ratios around 4:1.
  ChannelParams params;
  Placement pl;
  pl.mbs_xy = {{50.0, 50.0}};
  pl.user_xy = {{50.0, 60.0}, {50.0, 70.0}};  // d = 10 and 20, c ratio 4
  const Scenario scn =
      build_scenario(params, pl, {FadingMode::deterministic_unit, 0});
  InstanceConfig cfg = equal_weight_config(2);
  cfg.enforce_qos = false;
  const Solution sol =
      reoptimize_power(scn, cfg, Eigen::MatrixXd::Ones(2, 1));
  Eigen::VectorXd c(2), w(2);
  c << scn.snr_coeff(0, 0) * 1000.0, scn.snr_coeff(1, 0) * 1000.0;
  w << 0.5, 0.5;
  const auto wf = oracle::water_filling(c, w, 1.0, 1.0);
  const double got = 0.5 * std::log2(1.0 + c(0) * sol.p_mw(0, 0) / 1000.0) +
                     0.5 * std::log2(1.0 + c(1) * sol.p_mw(1, 0) / 1000.0);
  CHECK(got == doctest::Approx(wf.objective_log2).epsilon(1e-5));
}

TEST_CASE("reoptimized powers never lose to the supplied hint") {
  const Scenario scn = oracle::random_scenario(5, 3, 111, true);
  InstanceConfig cfg = equal_weight_config(5);
  cfg.enforce_qos = false;
  const Eigen::MatrixXd x = nearest_association(scn, 2);
  Eigen::MatrixXd hint = Eigen::MatrixXd::Constant(5, 3, 100.0);
  const double before =
      weighted_objective(scn, cfg, Solution{x, hint, true});
  const Solution sol = reoptimize_power(scn, cfg, x, &hint);
  CHECK(weighted_objective(scn, cfg, sol) >= before - 1e-6);
}

TEST_CASE("branch and bound explores the single-pair tree as one node") {
  const Scenario scn = oracle::unit_scenario(10.0);
  InstanceConfig cfg = equal_weight_config(1);
  cfg.enforce_qos = false;
  const BnbResult res = branch_and_bound(scn, cfg);
  CHECK(res.nodes_explored == 1);
  CHECK(res.solution.x(0, 0) == 1.0);
  CHECK(res.exhausted);
  CHECK(res.provenance == "bnb-exhaustive");
}

TEST_CASE("branch and bound matches brute force on small instances") {
  int checked = 0;
  for (std::uint64_t seed = 200; seed < 206; ++seed) {
    const Scenario scn = oracle::random_scenario(2, 2, seed, true);
    InstanceConfig cfg = equal_weight_config(2);
    cfg.enforce_qos = false;
    const auto best = oracle::exhaustive_best(scn, cfg);
    REQUIRE(best.feasible_patterns >= 1);
    const BnbResult res = branch_and_bound(scn, cfg);
    CHECK(res.exhausted);
    CHECK(res.objective_bps ==
          doctest::Approx(best.objective_bps).epsilon(1e-4));
    ++checked;
  }
  CHECK(checked == 6);
}

TEST_CASE("a unit node cap returns the root incumbent uncertified") {
  const Scenario scn = oracle::random_scenario(2, 2, 210, true);
  InstanceConfig cfg = equal_weight_config(2);
  cfg.enforce_qos = false;
  RecoverySettings rs;
  rs.bnb_node_cap = 1;
  const BnbResult res = branch_and_bound(scn, cfg, rs);
  CHECK(res.nodes_explored == 1);
  CHECK_FALSE(res.exhausted);
  CHECK(res.provenance == "bnb-capped");
  CHECK(std::isfinite(res.objective_bps));
}

TEST_CASE("settings validation") {
  RecoverySettings rs;
  rs.threshold = 1.0;
  CHECK_THROWS_AS(rs.validate(), std::invalid_argument);
  rs.threshold = 0.5;
  rs.bnb_node_cap = 0;
  CHECK_THROWS_AS(rs.validate(), std::invalid_argument);
}

}  // TEST_SUITE
