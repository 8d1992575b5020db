// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "mcua/barrier.hpp"
#include "mcua/dcp.hpp"
#include "mcua/model.hpp"

namespace mcua {

// Structural infeasibility (association pattern impossible under coverage,
// row/column requirements and the max-association cap).
struct InfeasibleInstanceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CcpSettings {
  double tau = 1e-4;   // objective-stall threshold, normalized rate units
  int max_outer = 100;
  BarrierSettings inner;
  std::string trace_path;  // per-outer-iteration CSV when nonempty

  void validate() const;
};

enum class CcpStatus { converged, max_outer, infeasible };

struct CcpIterRecord {
  int k = 0;
  double sum_u_norm = 0.0;        // solver objective at this iterate
  double weighted_rate_bps = 0.0;  // recomputed from (x, p), never sum u
  int newton_iters = 0;
  std::string stop_reason;
};

struct CcpTrace {
  std::vector<CcpIterRecord> iters;
  std::string message;
  void write_csv(const std::string& path) const;
};

struct CcpResult {
  LiftedPoint point;
  CcpTrace trace;
  CcpStatus status = CcpStatus::converged;
};

enum class AssocRank { distance, channel };

// Binary greedy association: every user takes its min(L, choices) best
// in-coverage mBSs, ranked by distance or by channel gain; userless mBSs
// are repaired by stealing their best user (swapping out that user's worst
// removable association). Entries of fix_x (0/1) are honored; -1 entries
// are free.
Eigen::MatrixXd nearest_association(const Scenario& scn, int max_assoc,
                                    const Eigen::MatrixXi* fix_x = nullptr,
                                    AssocRank rank = AssocRank::distance);

// Entries pinned by the row/column coverage requirements: a user with a
// single admissible mBS (or an mBS with a single admissible user) must take
// it, so the variable is a constant 1 and the solver keeps a strict
// interior. Starts from user_fix when given.
Eigen::MatrixXi forced_association_fix(const Scenario& scn,
                                       const Eigen::MatrixXi* user_fix = nullptr);

// Feasible start for the outer loop: nearest-L association, per-column
// power split at 90% of budget, auxiliaries from the lifting pulled
// slightly inside their constraints. Throws InfeasibleInstanceError when no
// association pattern exists.
LiftedPoint init_feasible(const Scenario& scn, const InstanceConfig& cfg,
                          const Eigen::MatrixXi* fix_x = nullptr);

// Outer convex-concave loop: rebuild the convexified program at the current
// iterate, re-interiorize, solve, adopt the optimum as the next
// linearization point, stop when the objective stalls by at most tau.
CcpResult run_ccp(const Scenario& scn, const InstanceConfig& cfg,
                  const CcpSettings& settings,
                  const Eigen::MatrixXi* fix_x = nullptr);

}  // namespace mcua
