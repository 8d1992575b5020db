// SPDX-License-Identifier: Apache-2.0
#include "mcua/recover.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

namespace mcua {

void RecoverySettings::validate() const {
  if (!(threshold > 0 && threshold < 1))
    throw std::invalid_argument("rounding threshold must be in (0,1)");
  if (bnb_node_cap < 1) throw std::invalid_argument("bnb_node_cap must be >= 1");
}

RecoveryResult round_and_repair(const Scenario& scn, const InstanceConfig& cfg,
                                const Solution& relaxed,
                                const RecoverySettings& settings) {
  settings.validate();
  const int n = scn.num_users();
  const int m = scn.num_mbs();
  cfg.validate(n, m);
  const int L = cfg.effective_max_assoc(m);
  const Eigen::MatrixXd& xt = relaxed.x;

  RecoveryResult out;
  out.provenance.push_back("rounded");
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      if (scn.in_coverage(i, j) && xt(i, j) >= settings.threshold) x(i, j) = 1.0;

  bool repaired = false;

  // Row coverage: an empty row takes its largest relaxed entry.
  for (int i = 0; i < n; ++i) {
    if (x.row(i).sum() >= 1.0) continue;
    int best = -1;
    double best_v = -1.0;
    for (int j = 0; j < m; ++j)
      if (scn.in_coverage(i, j) && xt(i, j) > best_v) {
        best_v = xt(i, j);
        best = j;
      }
    if (best < 0)
      throw std::runtime_error("round_and_repair: user without coverage");
    x(i, best) = 1.0;
    repaired = true;
  }

  // Row cap: keep the L largest relaxed entries.
  for (int i = 0; i < n; ++i) {
    int count = static_cast<int>(std::lround(x.row(i).sum()));
    if (count <= L) continue;
    std::vector<int> assoc;
    for (int j = 0; j < m; ++j)
      if (x(i, j) == 1.0) assoc.push_back(j);
    std::sort(assoc.begin(), assoc.end(),
              [&](int a, int b) { return xt(i, a) > xt(i, b); });
    for (std::size_t k = L; k < assoc.size(); ++k) x(i, assoc[k]) = 0.0;
    repaired = true;
  }

  // Column coverage: an empty column takes the user with the largest relaxed
  // entry; if that user is at the cap, its weakest swappable association is
  // dropped.
  int guard = n * m + 8;
  for (int j = 0; j < m; ++j) {
    if (x.col(j).sum() >= 1.0) continue;
    if (--guard < 0)
      throw std::runtime_error("round_and_repair: column repair did not converge");
    std::vector<int> cand;
    for (int i = 0; i < n; ++i)
      if (scn.in_coverage(i, j)) cand.push_back(i);
    std::sort(cand.begin(), cand.end(),
              [&](int a, int b) { return xt(a, j) > xt(b, j); });
    bool fixed = false;
    for (int i : cand) {
      const int row_count = static_cast<int>(std::lround(x.row(i).sum()));
      if (row_count < L) {
        x(i, j) = 1.0;
        fixed = true;
        break;
      }
      int drop = -1;
      double drop_v = std::numeric_limits<double>::infinity();
      for (int j2 = 0; j2 < m; ++j2) {
        if (j2 == j || x(i, j2) == 0.0 || x.col(j2).sum() < 2.0) continue;
        if (xt(i, j2) < drop_v) {
          drop_v = xt(i, j2);
          drop = j2;
        }
      }
      if (drop >= 0) {
        x(i, drop) = 0.0;
        x(i, j) = 1.0;
        fixed = true;
        break;
      }
    }
    if (!fixed)
      throw std::runtime_error("round_and_repair: mBS " + std::to_string(j) +
                               " cannot be covered under the row cap");
    repaired = true;
  }

  // Per-mBS budget: scale overloaded columns down proportionally.
  Eigen::MatrixXd p = relaxed.p_mw;
  for (int j = 0; j < m; ++j) {
    double load = 0.0;
    for (int i = 0; i < n; ++i)
      if (x(i, j) == 1.0) load += p(i, j);
    if (load > scn.params.p_max_mw) {
      const double scale = scn.params.p_max_mw / load;
      for (int i = 0; i < n; ++i)
        if (x(i, j) == 1.0) p(i, j) *= scale;
      repaired = true;
    }
  }

  if (repaired) out.provenance.push_back("repaired");
  out.repaired = repaired;
  out.solution = Solution{std::move(x), std::move(p), true};
  return out;
}

Solution reoptimize_power(const Scenario& scn, const InstanceConfig& cfg,
                          const Eigen::MatrixXd& x_fixed,
                          const Eigen::MatrixXd* p_hint_mw,
                          const BarrierSettings& settings) {
  const int n = scn.num_users();
  const int m = scn.num_mbs();
  cfg.validate(n, m);
  const int L = cfg.effective_max_assoc(m);
  if (x_fixed.rows() != n || x_fixed.cols() != m)
    throw std::invalid_argument("reoptimize_power: dimension mismatch");
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double v = x_fixed(i, j);
      if (v != 0.0 && v != 1.0)
        throw std::invalid_argument("reoptimize_power: association not binary");
      if (v == 1.0 && !scn.in_coverage(i, j))
        throw std::invalid_argument("reoptimize_power: association outside coverage");
    }
    const double row = x_fixed.row(i).sum();
    if (row < 1.0 || row > L)
      throw std::invalid_argument("reoptimize_power: row constraint violated");
  }
  for (int j = 0; j < m; ++j)
    if (x_fixed.col(j).sum() < 1.0)
      throw std::invalid_argument("reoptimize_power: empty mBS column");

  const Normalization norm = make_normalization(scn.params);
  const double p_lo = norm.p_hat(scn.params.p_min_mw);
  const double inv_ln2 = 1.0 / std::numbers::ln2;

  // Variables: one normalized power per associated pair, plus the epigraph
  // variable r for the concave weighted-rate objective.
  std::vector<std::pair<int, int>> assoc;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      if (x_fixed(i, j) == 1.0) assoc.push_back({i, j});
  const int na = static_cast<int>(assoc.size());
  const int ri = na;

  ConvexProgram prog;
  prog.dim = na + 1;
  Eigen::VectorXd col_count = x_fixed.colwise().sum();

  for (int a = 0; a < na; ++a) {
    SmoothConstraint lo;
    lo.label = "C4-";
    lo.lin.push_back({a, -1.0});
    lo.constant = p_lo;
    prog.constraints.push_back(std::move(lo));
    SmoothConstraint hi;
    hi.label = "C4+";
    hi.lin.push_back({a, 1.0});
    hi.constant = -1.0;
    prog.constraints.push_back(std::move(hi));
  }
  for (int j = 0; j < m; ++j) {
    SmoothConstraint budget;
    budget.label = "C5(" + std::to_string(j) + ")";
    for (int a = 0; a < na; ++a)
      if (assoc[a].second == j) budget.lin.push_back({a, 1.0});
    if (budget.lin.empty()) continue;
    budget.constant = -1.0;
    prog.constraints.push_back(std::move(budget));
  }
  {
    SmoothConstraint epi;
    epi.label = "OBJ";
    epi.lin.push_back({ri, 1.0});
    for (int a = 0; a < na; ++a) {
      const auto [i, j] = assoc[a];
      epi.logs.push_back({a, cfg.weights(i) * inv_ln2 / col_count(j),
                          norm.c_hat(scn.snr_coeff(i, j))});
    }
    prog.constraints.push_back(std::move(epi));
  }
  const double r_min_hat = norm.rate_hat(scn.params.r_min_bps);
  const int qos_begin = static_cast<int>(prog.constraints.size());
  if (cfg.enforce_qos && r_min_hat > 0) {
    for (int i = 0; i < n; ++i) {
      SmoothConstraint floor;
      floor.label = "C6(" + std::to_string(i) + ")";
      floor.constant = r_min_hat;
      for (int a = 0; a < na; ++a) {
        const auto [ai, j] = assoc[a];
        if (ai != i) continue;
        floor.logs.push_back(
            {a, inv_ln2 / col_count(j), norm.c_hat(scn.snr_coeff(i, j))});
      }
      prog.constraints.push_back(std::move(floor));
    }
  }
  prog.objective.push_back({ri, 1.0});
  prog.derive_bounds();

  Eigen::VectorXd z0(prog.dim);
  for (int a = 0; a < na; ++a) {
    const auto [i, j] = assoc[a];
    double ph = p_hint_mw ? norm.p_hat((*p_hint_mw)(i, j))
                          : 0.9 / col_count(j);
    ph = std::clamp(ph, p_lo + 1e-6 * (1.0 - p_lo), 1.0 - 1e-6);
    z0(a) = ph;
  }
  for (int j = 0; j < m; ++j) {
    double load = 0.0;
    for (int a = 0; a < na; ++a)
      if (assoc[a].second == j) load += z0(a);
    if (load > 0.999) {
      const double scale = 0.999 / load;
      for (int a = 0; a < na; ++a)
        if (assoc[a].second == j) z0(a) = std::max(z0(a) * scale, p_lo + 1e-9);
    }
  }
  {
    double val = 0.0;
    for (const LogTerm& t : prog.constraints.back().logs)
      val += t.weight * std::log(1.0 + t.scale * z0(t.index));
    z0(ri) = val - 1.0;
  }

  Eigen::VectorXd start = z0;
  if (prog.max_violation(start) >= 0) {
    auto ph = phase1(prog, z0, settings);
    if (!ph && qos_begin < static_cast<int>(prog.constraints.size())) {
      // Rate floor unreachable for this fixed association; solve without it
      // and let the caller report the shortfall.
      prog.constraints.resize(qos_begin);
      ph = phase1(prog, z0, settings);
    }
    if (!ph)
      throw InfeasibleInstanceError("reoptimize_power: no strictly feasible power");
    start = *ph;
  }
  const SolveResult res = solve(prog, start, settings);

  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(n, m, scn.params.p_min_mw);
  for (int a = 0; a < na; ++a) {
    const auto [i, j] = assoc[a];
    p(i, j) = norm.p_phys(std::clamp(res.z(a), p_lo, 1.0));
  }
  Solution sol{x_fixed, std::move(p), true};

  if (p_hint_mw) {
    const Solution hint_sol{x_fixed, *p_hint_mw, true};
    auto meets_floor = [&](const Solution& s) {
      return !cfg.enforce_qos ||
             (user_rates(scn, s.x, s.p_mw).array() >=
              scn.params.r_min_bps - 1e-6)
                 .all();
    };
    const bool q_new = meets_floor(sol), q_hint = meets_floor(hint_sol);
    if (q_hint == q_new) {
      if (weighted_objective(scn, cfg, hint_sol) >
          weighted_objective(scn, cfg, sol))
        return hint_sol;
    } else if (q_hint) {
      return hint_sol;
    }
  }
  return sol;
}

namespace {

struct BnbNode {
  Eigen::MatrixXi fix;
  double bound = 0.0;
  int order_pos = 0;
};

struct BoundLess {
  bool operator()(const BnbNode& a, const BnbNode& b) const {
    return a.bound < b.bound;
  }
};

// C2/C3/L screen on a partial fix; -1 entries count as available.
bool structurally_possible(const Scenario& scn, int L,
                           const Eigen::MatrixXi& fix) {
  const int n = scn.num_users();
  const int m = scn.num_mbs();
  for (int i = 0; i < n; ++i) {
    int ones = 0, avail = 0;
    for (int j = 0; j < m; ++j) {
      if (!scn.in_coverage(i, j)) continue;
      if (fix(i, j) == 1) ++ones;
      if (fix(i, j) != 0) ++avail;
    }
    if (ones > L || avail == 0) return false;
  }
  for (int j = 0; j < m; ++j) {
    int avail = 0;
    for (int i = 0; i < n; ++i)
      if (scn.in_coverage(i, j) && fix(i, j) != 0) ++avail;
    if (avail == 0) return false;
  }
  return true;
}

// Fix entries forced by row/column coverage (single admissible choice).
void presolve_forced(const Scenario& scn, Eigen::MatrixXi& fix) {
  const int n = scn.num_users();
  const int m = scn.num_mbs();
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < n; ++i) {
      int avail = 0, last = -1;
      bool has_one = false;
      for (int j = 0; j < m; ++j) {
        if (!scn.in_coverage(i, j) || fix(i, j) == 0) continue;
        if (fix(i, j) == 1) has_one = true;
        ++avail;
        last = j;
      }
      if (!has_one && avail == 1 && fix(i, last) != 1) {
        fix(i, last) = 1;
        changed = true;
      }
    }
    for (int j = 0; j < m; ++j) {
      int avail = 0, last = -1;
      bool has_one = false;
      for (int i = 0; i < n; ++i) {
        if (!scn.in_coverage(i, j) || fix(i, j) == 0) continue;
        if (fix(i, j) == 1) has_one = true;
        ++avail;
        last = i;
      }
      if (!has_one && avail == 1 && fix(last, j) != 1) {
        fix(last, j) = 1;
        changed = true;
      }
    }
  }
}

bool all_decided(const Scenario& scn, const Eigen::MatrixXi& fix) {
  for (int i = 0; i < scn.num_users(); ++i)
    for (int j = 0; j < scn.num_mbs(); ++j)
      if (scn.in_coverage(i, j) && fix(i, j) < 0) return false;
  return true;
}

}  // namespace

BnbResult branch_and_bound(const Scenario& scn, const InstanceConfig& cfg,
                           const RecoverySettings& settings,
                           const CcpSettings& ccp_settings) {
  settings.validate();
  const int n = scn.num_users();
  const int m = scn.num_mbs();
  cfg.validate(n, m);
  const int L = cfg.effective_max_assoc(m);
  const double w_hz = scn.params.bandwidth_hz;

  BnbResult out;
  double incumbent = -std::numeric_limits<double>::infinity();
  Solution best;

  auto try_leaf = [&](const Eigen::MatrixXi& fix) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        if (scn.in_coverage(i, j) && fix(i, j) == 1) x(i, j) = 1.0;
    for (int i = 0; i < n; ++i) {
      const double r = x.row(i).sum();
      if (r < 1.0 || r > L) return;
    }
    for (int j = 0; j < m; ++j)
      if (x.col(j).sum() < 1.0) return;
    const Solution sol = reoptimize_power(scn, cfg, x, nullptr,
                                          ccp_settings.inner);
    const double obj = weighted_objective(scn, cfg, sol);
    if (obj > incumbent) {
      incumbent = obj;
      best = sol;
    }
  };

  // Relaxation bound + rounding incumbent for a partial fix; returns the
  // bound or nothing when the node's relaxation is infeasible.
  auto relax_node = [&](const Eigen::MatrixXi& fix) -> std::optional<double> {
    CcpResult cr = run_ccp(scn, cfg, ccp_settings, &fix);
    if (cr.status == CcpStatus::infeasible) return std::nullopt;
    const RecoveryResult rr = round_and_repair(
        scn, cfg, Solution{cr.point.x, cr.point.p_mw, false}, settings);
    Solution cand = rr.solution;
    if (settings.reopt_power)
      cand = reoptimize_power(scn, cfg, cand.x, &cand.p_mw, ccp_settings.inner);
    InstanceConfig chk = cfg;
    chk.enforce_qos = false;
    if (check_op1(scn, chk, cand).feasible()) {
      const double obj = weighted_objective(scn, cfg, cand);
      if (obj > incumbent) {
        incumbent = obj;
        best = cand;
      }
    }
    return cr.trace.iters.back().sum_u_norm * w_hz;
  };

  Eigen::MatrixXi root_fix = Eigen::MatrixXi::Constant(n, m, -1);
  presolve_forced(scn, root_fix);
  if (!structurally_possible(scn, L, root_fix))
    throw InfeasibleInstanceError("branch_and_bound: no feasible association");

  // Branch ordering by root fractionality.
  std::vector<std::pair<int, int>> order;
  {
    CcpResult root = run_ccp(scn, cfg, ccp_settings, &root_fix);
    ++out.nodes_explored;
    if (root.status == CcpStatus::infeasible)
      throw InfeasibleInstanceError("branch_and_bound: root relaxation infeasible");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        if (scn.in_coverage(i, j) && root_fix(i, j) < 0) order.push_back({i, j});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
      return std::abs(root.point.x(a.first, a.second) - 0.5) <
             std::abs(root.point.x(b.first, b.second) - 0.5);
    });
    const RecoveryResult rr = round_and_repair(
        scn, cfg, Solution{root.point.x, root.point.p_mw, false}, settings);
    Solution cand = rr.solution;
    if (settings.reopt_power)
      cand = reoptimize_power(scn, cfg, cand.x, &cand.p_mw, ccp_settings.inner);
    InstanceConfig chk = cfg;
    chk.enforce_qos = false;
    if (check_op1(scn, chk, cand).feasible()) {
      incumbent = weighted_objective(scn, cfg, cand);
      best = cand;
    }
    std::priority_queue<BnbNode, std::vector<BnbNode>, BoundLess> pq;
    if (all_decided(scn, root_fix)) {
      try_leaf(root_fix);
    } else {
      pq.push({root_fix, root.trace.iters.back().sum_u_norm * w_hz, 0});
    }

    while (!pq.empty() && out.nodes_explored < settings.bnb_node_cap) {
      const BnbNode node = pq.top();
      pq.pop();
      if (node.bound <= incumbent * (1.0 + 1e-9) + 1e-9) break;  // heap is sorted
      int pos = node.order_pos;
      while (pos < static_cast<int>(order.size()) &&
             node.fix(order[pos].first, order[pos].second) >= 0)
        ++pos;
      if (pos >= static_cast<int>(order.size())) continue;
      for (const int val : {1, 0}) {
        Eigen::MatrixXi child = node.fix;
        child(order[pos].first, order[pos].second) = val;
        presolve_forced(scn, child);
        if (!structurally_possible(scn, L, child)) continue;
        if (out.nodes_explored >= settings.bnb_node_cap) break;
        ++out.nodes_explored;
        if (all_decided(scn, child)) {
          try_leaf(child);
          continue;
        }
        const auto bound = relax_node(child);
        if (!bound) continue;
        const double b = std::min(*bound, node.bound);
        if (b > incumbent * (1.0 + 1e-9) + 1e-9)
          pq.push({std::move(child), b, pos + 1});
      }
    }
    out.node_cap_hit = !pq.empty() && out.nodes_explored >= settings.bnb_node_cap;
    out.exhausted = !out.node_cap_hit;
  }

  if (!std::isfinite(incumbent))
    throw InfeasibleInstanceError("branch_and_bound: no feasible incumbent");
  out.solution = best;
  out.objective_bps = incumbent;
  out.provenance = out.exhausted ? "bnb-exhaustive" : "bnb-capped";
  return out;
}

}  // namespace mcua
