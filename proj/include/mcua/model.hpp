// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "mcua/scenario.hpp"

namespace mcua {

struct InstanceConfig {
  Eigen::VectorXd weights;  // n positive entries summing to 1
  int max_assoc = std::numeric_limits<int>::max();  // L; >= m means unbounded
  bool enforce_qos = true;

  int effective_max_assoc(int m) const { return std::min(max_assoc, m); }
  void validate(int n, int m) const;
};

InstanceConfig equal_weight_config(int n);

// The (X, P) pair. x is binary when `integral`, otherwise relaxed in [0,1].
struct Solution {
  Eigen::MatrixXd x;
  Eigen::MatrixXd p_mw;
  bool integral = false;
};

// Iterate of the lifted problem. u and v are in normalized rate units
// (rates divided by the bandwidth); x and p_mw are physical.
struct LiftedPoint {
  Eigen::MatrixXd x;
  Eigen::MatrixXd p_mw;
  Eigen::MatrixXd u;
  Eigen::MatrixXd v;
};

struct Violation {
  std::string constraint;  // "C1".."C6", "C2L" (row-sum cap), "COV"
  int i = -1;
  int j = -1;
  double residual = 0.0;  // positive violation magnitude
};

struct FeasibilityReport {
  std::vector<Violation> violated;
  bool feasible() const { return violated.empty(); }
  std::string summary() const;
};

// Evaluates the original problem's constraints at `sol` and reports every
// violation beyond `tol`. C6 (per-user rate floor) is checked only when
// cfg.enforce_qos is set.
FeasibilityReport check_op1(const Scenario& scn, const InstanceConfig& cfg,
                            const Solution& sol, double tol = 1e-6);

// sum_i w_i R_i in bit/s.
double weighted_objective(const Scenario& scn, const InstanceConfig& cfg,
                          const Solution& sol);

// Lifts a relaxed solution to (x, p, u, v) with the auxiliary constraints
// holding with equality: v_ij = sqrt(x_ij w_i log2(1+gamma_ij)) and
// u_ij = v_ij^2 / colsum_j, in normalized rate units.
LiftedPoint lift_to_op3(const Scenario& scn, const InstanceConfig& cfg,
                        const Solution& sol_relaxed);

// Physical <-> solver units. Powers are divided by p_max, rates by the
// bandwidth; conversion lives here and nowhere else.
struct Normalization {
  double p_max_mw = 1.0;
  double bandwidth_hz = 1.0;

  double p_hat(double mw) const { return mw / p_max_mw; }
  double p_phys(double hat) const { return hat * p_max_mw; }
  double rate_hat(double bps) const { return bps / bandwidth_hz; }
  double rate_phys(double hat) const { return hat * bandwidth_hz; }
  // gamma = c * p = c_hat * p_hat
  double c_hat(double c_per_mw) const { return c_per_mw * p_max_mw; }
};

Normalization make_normalization(const ChannelParams& params);

}  // namespace mcua
