// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "mcua/ccp.hpp"
#include "mcua/model.hpp"

namespace mcua {

struct RecoverySettings {
  double threshold = 0.5;  // rounding cutoff in (0,1)
  int bnb_node_cap = 4096;
  bool reopt_power = true;

  void validate() const;
};

struct RecoveryResult {
  Solution solution;
  bool repaired = false;
  std::vector<std::string> provenance;  // "rounded", "repaired", ...
};

// Thresholds the relaxed association and greedily restores row coverage,
// the row cap and column coverage; per-mBS power overloads are fixed by
// proportional downscaling. QoS is not repaired (report it, don't hide it).
RecoveryResult round_and_repair(const Scenario& scn, const InstanceConfig& cfg,
                                const Solution& relaxed,
                                const RecoverySettings& settings = {});

// Optimal powers for a fixed binary association: concave maximization of
// the weighted rate under the per-link box and per-mBS budget, solved with
// the barrier method through an epigraph variable. Never returns a lower
// objective than the supplied power hint.
Solution reoptimize_power(const Scenario& scn, const InstanceConfig& cfg,
                          const Eigen::MatrixXd& x_fixed,
                          const Eigen::MatrixXd* p_hint_mw = nullptr,
                          const BarrierSettings& settings = {});

struct BnbResult {
  Solution solution;
  double objective_bps = 0.0;
  bool node_cap_hit = false;
  // True when the search drained its queue within the node cap. Bounds come
  // from the (local) relaxation heuristic, so this is incumbent semantics,
  // not a certificate.
  bool exhausted = false;
  int nodes_explored = 0;
  std::string provenance;  // "bnb-exhaustive" | "bnb-capped"
};

// Best-first search over the binary association entries; node bounds are
// relaxation values with the branched entries fixed, leaves get
// reoptimized powers.
BnbResult branch_and_bound(const Scenario& scn, const InstanceConfig& cfg,
                           const RecoverySettings& settings = {},
                           const CcpSettings& ccp_settings = {});

}  // namespace mcua
