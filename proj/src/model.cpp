// SPDX-License-Identifier: Apache-2.0
#include "mcua/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace mcua {

void InstanceConfig::validate(int n, int m) const {
  if (weights.size() != n)
    throw std::invalid_argument("weights length must equal user count");
  for (int i = 0; i < n; ++i)
    if (!(weights(i) > 0)) throw std::invalid_argument("weights must be positive");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("weights must sum to 1");
  if (max_assoc < 1) throw std::invalid_argument("max_assoc must be >= 1");
  (void)m;
}

InstanceConfig equal_weight_config(int n) {
  InstanceConfig cfg;
  cfg.weights = Eigen::VectorXd::Constant(n, 1.0 / n);
  return cfg;
}

std::string FeasibilityReport::summary() const {
  if (violated.empty()) return "feasible";
  std::ostringstream os;
  os << violated.size() << " violation(s):";
  for (const Violation& v : violated) {
    os << " " << v.constraint << "[" << v.i;
    if (v.j >= 0) os << "," << v.j;
    os << "]=" << v.residual;
  }
  return os.str();
}

FeasibilityReport check_op1(const Scenario& scn, const InstanceConfig& cfg,
                            const Solution& sol, double tol) {
  const int n = scn.num_users();
  const int m = scn.num_mbs();
  cfg.validate(n, m);
  if (sol.x.rows() != n || sol.x.cols() != m || sol.p_mw.rows() != n ||
      sol.p_mw.cols() != m)
    throw std::invalid_argument("check_op1: dimension mismatch");

  FeasibilityReport rep;
  auto add = [&](const char* c, int i, int j, double r) {
    if (r > tol) rep.violated.push_back({c, i, j, r});
  };

  const int L = cfg.effective_max_assoc(m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double xij = sol.x(i, j);
      if (sol.integral) {
        add("C1", i, j, std::min(std::abs(xij), std::abs(xij - 1.0)));
      } else {
        add("C1", i, j, std::max(-xij, xij - 1.0));
      }
      if (!scn.in_coverage(i, j)) add("COV", i, j, xij);
      add("C4", i, j, std::max(scn.params.p_min_mw - sol.p_mw(i, j),
                               sol.p_mw(i, j) - scn.params.p_max_mw));
    }
    const double row = sol.x.row(i).sum();
    add("C2", i, -1, 1.0 - row);
    add("C2L", i, -1, row - L);
  }
  for (int j = 0; j < m; ++j) {
    add("C3", -1, j, 1.0 - sol.x.col(j).sum());
    double load = 0.0;
    for (int i = 0; i < n; ++i) load += sol.x(i, j) * sol.p_mw(i, j);
    add("C5", -1, j, load - scn.params.p_max_mw);
  }
  if (cfg.enforce_qos) {
    const Eigen::VectorXd rates = user_rates(scn, sol.x, sol.p_mw);
    for (int i = 0; i < n; ++i)
      add("C6", i, -1, scn.params.r_min_bps - rates(i));
  }
  return rep;
}

double weighted_objective(const Scenario& scn, const InstanceConfig& cfg,
                          const Solution& sol) {
  cfg.validate(scn.num_users(), scn.num_mbs());
  return cfg.weights.dot(user_rates(scn, sol.x, sol.p_mw));
}

LiftedPoint lift_to_op3(const Scenario& scn, const InstanceConfig& cfg,
                        const Solution& sol_relaxed) {
  const int n = scn.num_users();
  const int m = scn.num_mbs();
  cfg.validate(n, m);

  LiftedPoint pt;
  pt.x = sol_relaxed.x;
  pt.p_mw = sol_relaxed.p_mw;
  pt.u = Eigen::MatrixXd::Zero(n, m);
  pt.v = Eigen::MatrixXd::Zero(n, m);

  const double inv_ln2 = 1.0 / std::numbers::ln2;
  for (int j = 0; j < m; ++j) {
    const double col_sum = sol_relaxed.x.col(j).sum();
    for (int i = 0; i < n; ++i) {
      const double xij = sol_relaxed.x(i, j);
      if (xij <= 0) continue;
      if (col_sum <= 0)
        throw std::logic_error("lift_to_op3: positive x with zero column sum");
      const double se =
          std::log1p(scn.snr_coeff(i, j) * sol_relaxed.p_mw(i, j)) * inv_ln2;
      const double v2 = xij * cfg.weights(i) * se;
      pt.v(i, j) = std::sqrt(std::max(0.0, v2));
      pt.u(i, j) = v2 / col_sum;
    }
  }
  return pt;
}

Normalization make_normalization(const ChannelParams& params) {
  return Normalization{params.p_max_mw, params.bandwidth_hz};
}

}  // namespace mcua
