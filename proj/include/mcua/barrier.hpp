// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "mcua/dcp.hpp"

namespace mcua {

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BarrierSettings {
  double t0 = 1.0;
  double mu = 20.0;
  double eps_gap = 1e-7;      // stop when m_c / t <= eps_gap
  double newton_tol = 1e-10;  // centering stop on lambda^2 / 2
  int max_newton = 50;        // Newton steps per centering
  double ls_alpha = 0.1;
  double ls_beta = 0.5;
  std::string trace_path;  // per-iteration CSV when nonempty

  void validate() const;
};

enum class SolveStatus { optimal, max_iters, infeasible };

struct SolveResult {
  Eigen::VectorXd z;
  double objective = 0.0;
  double gap_bound = 0.0;
  int newton_iters_total = 0;
  SolveStatus status = SolveStatus::optimal;
};

struct NewtonStep {
  Eigen::VectorXd step;
  double decrement2 = 0.0;  // lambda^2 = grad' H^-1 grad
};

// -H^-1 g by dense Cholesky, with Tikhonov regularization escalating from
// 1e-10 to 1e-2 when the factorization fails. Throws SolverFailure past the
// ceiling.
NewtonStep newton_direction(const Eigen::MatrixXd& hess,
                            const Eigen::VectorXd& grad);

// Phase-I target: every constraint at most -kStrictMargin.
inline constexpr double kStrictMargin = 1e-6;

// Pulls coordinates outside the program's derived variable bounds back to a
// small interior offset. Coordinates already inside are left alone.
Eigen::VectorXd clamp_to_bounds(const ConvexProgram& prog, Eigen::VectorXd z);

// Finds a strictly feasible point by minimizing the max-infeasibility scalar
// with the same barrier machinery, starting from (a clamped copy of) hint.
// A hint that is already strictly feasible is returned unchanged. Returns
// nullopt when the optimal infeasibility is not below -kStrictMargin.
std::optional<Eigen::VectorXd> phase1(const ConvexProgram& prog,
                                      const Eigen::VectorXd& hint,
                                      const BarrierSettings& settings = {});

// Maximizes the program objective from a strictly feasible z0 by the
// standard path-following barrier method. The returned objective is within
// gap_bound of the true optimum when status == optimal.
SolveResult solve(const ConvexProgram& prog, const Eigen::VectorXd& z0,
                  const BarrierSettings& settings = {});

}  // namespace mcua
