// SPDX-License-Identifier: Apache-2.0
#include "mcua/ccp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

namespace mcua {

void CcpSettings::validate() const {
  if (!(tau > 0)) throw std::invalid_argument("ccp tau must be > 0");
  if (max_outer < 1) throw std::invalid_argument("ccp max_outer must be >= 1");
  inner.validate();
}

void CcpTrace::write_csv(const std::string& path) const {
  std::ofstream os(path);
  os << "schema,mcua.ccp-trace.v1\n";
  os << "k,sum_u_norm,weighted_rate_bps,newton_iters,stop_reason\n";
  for (const CcpIterRecord& r : iters)
    os << r.k << "," << r.sum_u_norm << "," << r.weighted_rate_bps << ","
       << r.newton_iters << "," << r.stop_reason << "\n";
}

Eigen::MatrixXd nearest_association(const Scenario& scn, int max_assoc,
                                    const Eigen::MatrixXi* fix_x,
                                    AssocRank rank) {
  const int n = scn.num_users();
  const int m = scn.num_mbs();
  const int L = std::min(max_assoc, m);
  if (L < 1) throw std::invalid_argument("max_assoc must be >= 1");
  if (fix_x && (fix_x->rows() != n || fix_x->cols() != m))
    throw std::invalid_argument("fix_x dimension mismatch");

  auto fix = [&](int i, int j) { return fix_x ? (*fix_x)(i, j) : -1; };
  auto admissible = [&](int i, int j) {
    return scn.in_coverage(i, j) && fix(i, j) != 0;
  };
  // Smaller is better for both rankings.
  auto cost = [&](int i, int j) {
    return rank == AssocRank::distance ? scn.placement.distance(i, j)
                                       : -scn.snr_coeff(i, j);
  };

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, m);
  for (int i = 0; i < n; ++i) {
    int count = 0;
    for (int j = 0; j < m; ++j) {
      if (fix(i, j) == 1) {
        if (!scn.in_coverage(i, j))
          throw InfeasibleInstanceError("pair fixed to 1 outside coverage");
        x(i, j) = 1.0;
        ++count;
      }
    }
    if (count > L)
      throw InfeasibleInstanceError("fixed associations exceed max_assoc");
    std::vector<int> cand;
    for (int j = 0; j < m; ++j)
      if (admissible(i, j) && x(i, j) == 0.0) cand.push_back(j);
    std::stable_sort(cand.begin(), cand.end(),
                     [&](int a, int b) { return cost(i, a) < cost(i, b); });
    for (int j : cand) {
      if (count >= L) break;
      x(i, j) = 1.0;
      ++count;
    }
    if (count == 0)
      throw InfeasibleInstanceError("user " + std::to_string(i) +
                                    " has no admissible mBS");
  }

  // Repair userless mBSs by stealing their nearest admissible user.
  for (int j = 0; j < m; ++j) {
    if (x.col(j).sum() >= 1.0) continue;
    std::vector<int> cand;
    for (int i = 0; i < n; ++i)
      if (admissible(i, j)) cand.push_back(i);
    std::stable_sort(cand.begin(), cand.end(),
                     [&](int a, int b) { return cost(a, j) < cost(b, j); });
    bool repaired = false;
    for (int i : cand) {
      const int row_count = static_cast<int>(std::lround(x.row(i).sum()));
      if (row_count < L) {
        x(i, j) = 1.0;
        repaired = true;
        break;
      }
      // Swap out the farthest removable association of user i whose column
      // keeps at least one user.
      int drop = -1;
      double drop_c = -std::numeric_limits<double>::infinity();
      for (int j2 = 0; j2 < m; ++j2) {
        if (j2 == j || x(i, j2) == 0.0 || fix(i, j2) == 1) continue;
        if (x.col(j2).sum() < 2.0) continue;
        if (cost(i, j2) > drop_c) {
          drop_c = cost(i, j2);
          drop = j2;
        }
      }
      if (drop >= 0) {
        x(i, drop) = 0.0;
        x(i, j) = 1.0;
        repaired = true;
        break;
      }
    }
    if (!repaired)
      throw InfeasibleInstanceError("mBS " + std::to_string(j) +
                                    " cannot be assigned a user");
  }
  return x;
}

Eigen::MatrixXi forced_association_fix(const Scenario& scn,
                                       const Eigen::MatrixXi* user_fix) {
  const int n = scn.num_users();
  const int m = scn.num_mbs();
  Eigen::MatrixXi fix = user_fix ? *user_fix
                                 : Eigen::MatrixXi::Constant(n, m, -1);
  if (fix.rows() != n || fix.cols() != m)
    throw std::invalid_argument("fix_x dimension mismatch");
  auto admissible = [&](int i, int j) {
    return scn.in_coverage(i, j) && fix(i, j) != 0;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < n; ++i) {
      int avail = 0, last = -1;
      for (int j = 0; j < m; ++j)
        if (admissible(i, j)) {
          ++avail;
          last = j;
        }
      if (avail == 1 && fix(i, last) != 1) {
        fix(i, last) = 1;
        changed = true;
      }
    }
    for (int j = 0; j < m; ++j) {
      int avail = 0, last = -1;
      for (int i = 0; i < n; ++i)
        if (admissible(i, j)) {
          ++avail;
          last = i;
        }
      if (avail == 1 && fix(last, j) != 1) {
        fix(last, j) = 1;
        changed = true;
      }
    }
  }
  return fix;
}

namespace {

// One association per user, nearest-first but capped at ceil(n/m) users per
// mBS so no column is starved or overloaded; userless mBSs steal their
// nearest user from a multi-user column.
Eigen::MatrixXd balanced_association(const Scenario& scn,
                                     const Eigen::MatrixXi* fix_x) {
  const int n = scn.num_users();
  const int m = scn.num_mbs();
  const int cap = (n + m - 1) / m;
  auto fix = [&](int i, int j) { return fix_x ? (*fix_x)(i, j) : -1; };

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, m);
  Eigen::VectorXi count = Eigen::VectorXi::Zero(m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      if (fix(i, j) == 1) {
        x(i, j) = 1.0;
        ++count(j);
      }
  for (int i = 0; i < n; ++i) {
    if (x.row(i).sum() >= 1.0) continue;
    std::vector<int> cand;
    for (int j = 0; j < m; ++j)
      if (scn.in_coverage(i, j) && fix(i, j) != 0) cand.push_back(j);
    if (cand.empty())
      throw InfeasibleInstanceError("user " + std::to_string(i) +
                                    " has no admissible mBS");
    std::stable_sort(cand.begin(), cand.end(), [&](int a, int b) {
      return scn.placement.distance(i, a) < scn.placement.distance(i, b);
    });
    int pick = -1;
    for (int j : cand)
      if (count(j) < cap) {
        pick = j;
        break;
      }
    if (pick < 0) {
      pick = cand.front();
      for (int j : cand)
        if (count(j) < count(pick)) pick = j;
    }
    x(i, pick) = 1.0;
    ++count(pick);
  }
  for (int j = 0; j < m; ++j) {
    if (count(j) >= 1) continue;
    int steal_i = -1, steal_j = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (!scn.in_coverage(i, j) || fix(i, j) == 0) continue;
      for (int j2 = 0; j2 < m; ++j2) {
        if (x(i, j2) != 1.0 || fix(i, j2) == 1 || count(j2) < 2) continue;
        const double d = scn.placement.distance(i, j);
        if (d < best_d) {
          best_d = d;
          steal_i = i;
          steal_j = j2;
        }
      }
    }
    if (steal_i < 0)
      throw InfeasibleInstanceError("mBS " + std::to_string(j) +
                                    " cannot be assigned a user");
    x(steal_i, steal_j) = 0.0;
    --count(steal_j);
    x(steal_i, j) = 1.0;
    ++count(j);
  }
  return x;
}

// Lifts a binary association into a strictly interior start: 90% of the
// power budget split per column, auxiliaries from the lifting pulled
// slightly inside the rate cap and the share bound.
LiftedPoint make_init_point(const Scenario& scn, const InstanceConfig& cfg,
                            const Eigen::MatrixXd& x,
                            const Eigen::MatrixXi* fix_x) {
  const int n = scn.num_users();
  const int m = scn.num_mbs();
  const Normalization norm = make_normalization(scn.params);
  Eigen::VectorXd col_count = x.colwise().sum();
  const double p_lo = norm.p_hat(scn.params.p_min_mw);
  Eigen::MatrixXd p_mw(n, m);
  for (int j = 0; j < m; ++j) {
    const double share = 0.9 / std::max(col_count(j), 1.0);
    const double p_hat = std::clamp(share, p_lo + 1e-3 * (1.0 - p_lo), 0.999);
    for (int i = 0; i < n; ++i) {
      const bool excluded =
          !scn.in_coverage(i, j) || (fix_x && (*fix_x)(i, j) == 0);
      p_mw(i, j) = excluded ? scn.params.p_min_mw : norm.p_phys(p_hat);
    }
  }

  LiftedPoint pt = lift_to_op3(scn, cfg, Solution{x, p_mw, true});
  pt.v *= std::sqrt(0.995);
  pt.u *= 0.99 * 0.995;
  return pt;
}

}  // namespace

LiftedPoint init_feasible(const Scenario& scn, const InstanceConfig& cfg,
                          const Eigen::MatrixXi* fix_x) {
  cfg.validate(scn.num_users(), scn.num_mbs());
  const int L = cfg.effective_max_assoc(scn.num_mbs());
  return make_init_point(scn, cfg, nearest_association(scn, L, fix_x), fix_x);
}

namespace {

std::string qos_warning(const Scenario& scn, const InstanceConfig& cfg,
                        const LiftedPoint& pt) {
  if (!cfg.enforce_qos) return {};
  const Normalization norm = make_normalization(scn.params);
  const double r_min_hat = norm.rate_hat(scn.params.r_min_bps);
  std::ostringstream os;
  for (int i = 0; i < pt.u.rows(); ++i) {
    const double need = cfg.weights(i) * r_min_hat;
    if (pt.u.row(i).sum() < need)
      os << "user " << i << " below QoS at start; ";
  }
  return os.str();
}

}  // namespace

CcpResult run_ccp(const Scenario& scn, const InstanceConfig& cfg,
                  const CcpSettings& settings, const Eigen::MatrixXi* fix_x) {
  settings.validate();
  CcpResult out;
  CcpTrace& trace = out.trace;

  const Eigen::MatrixXi eff_fix = forced_association_fix(scn, fix_x);
  fix_x = &eff_fix;
  const int L = cfg.effective_max_assoc(scn.num_mbs());

  // Start candidates in order: the max-association pattern, a load-balanced
  // single association, the plain nearest-mBS association. Dense starts can
  // put every user below the QoS floor (heavy sharing), leaving phase-I an
  // infeasible tangent program that a sparser start avoids.
  std::vector<Eigen::MatrixXd> starts;
  try {
    cfg.validate(scn.num_users(), scn.num_mbs());
    starts.push_back(nearest_association(scn, L, fix_x));
  } catch (const InfeasibleInstanceError& e) {
    out.status = CcpStatus::infeasible;
    trace.message = e.what();
    return out;
  }
  {
    // Sparser fallbacks; skip any that the fixed entries rule out.
    const std::function<Eigen::MatrixXd()> builders[] = {
        [&] { return balanced_association(scn, fix_x); },
        [&] { return nearest_association(scn, 1, fix_x); }};
    for (const auto& make : builders) {
      try {
        Eigen::MatrixXd alt = make();
        bool fresh = true;
        for (const Eigen::MatrixXd& s : starts)
          if ((alt - s).cwiseAbs().maxCoeff() == 0) fresh = false;
        if (fresh) starts.push_back(std::move(alt));
      } catch (const InfeasibleInstanceError&) {
      }
    }
  }

  LiftedPoint point;
  std::optional<Op4Program> op4;
  Eigen::VectorXd z0;
  for (std::size_t c = 0; c < starts.size() && !op4; ++c) {
    LiftedPoint cand = make_init_point(scn, cfg, starts[c], fix_x);
    if (c == 0) trace.message = qos_warning(scn, cfg, cand);
    Op4Program built = build_op4(scn, cfg, cand, fix_x);
    std::optional<Eigen::VectorXd> ph;
    try {
      ph = phase1(built.prog, built.vars.pack(cand), settings.inner);
    } catch (const SolverFailure& e) {
      throw SolverFailure("ccp iteration 1: " + std::string(e.what()));
    }
    if (ph) {
      point = std::move(cand);
      op4 = std::move(built);
      z0 = std::move(*ph);
      if (c > 0)
        trace.message += "start candidate " + std::to_string(c) +
                         " used (earlier starts rejected by phase-I); ";
    }
  }
  if (!op4) {
    out.status = CcpStatus::infeasible;
    trace.message += "phase-I infeasible at start";
    return out;
  }

  double r_prev = point.u.sum();
  trace.iters.push_back(
      {0, r_prev,
       weighted_objective(scn, cfg, Solution{point.x, point.p_mw, false}),
       0, "init"});

  out.status = CcpStatus::max_outer;
  for (int k = 1; k <= settings.max_outer; ++k) {
    if (k > 1) {
      op4 = build_op4(scn, cfg, point, fix_x);
      const Eigen::VectorXd hint = op4->vars.pack(point);
      // The repacked previous optimum sits essentially on the new boundary
      // (the rebuilt tangents are exact at it), so every iteration
      // re-interiorizes through phase-I before the main solve.
      std::optional<Eigen::VectorXd> ph;
      try {
        ph = phase1(op4->prog, hint, settings.inner);
      } catch (const SolverFailure& e) {
        throw SolverFailure("ccp iteration " + std::to_string(k) + ": " +
                            e.what());
      }
      if (!ph)
        throw SolverFailure("ccp iteration " + std::to_string(k) +
                            ": phase-I lost feasibility");
      z0 = std::move(*ph);
    }

    BarrierSettings inner = settings.inner;
    if (!inner.trace_path.empty())
      inner.trace_path += "." + std::to_string(k);
    SolveResult res;
    try {
      res = solve(op4->prog, z0, inner);
    } catch (const SolverFailure& e) {
      throw SolverFailure("ccp iteration " + std::to_string(k) + ": " +
                          e.what());
    }

    point = op4->vars.unpack(res.z);
    point.v = point.v.cwiseAbs();  // nonnegative branch of the square root

    const double r_k = res.objective;
    std::string reason;
    if (res.status == SolveStatus::max_iters) reason = "barrier-max-iters";
    const double rate =
        weighted_objective(scn, cfg, Solution{point.x, point.p_mw, false});
    trace.iters.push_back({k, r_k, rate, res.newton_iters_total, reason});

    if (std::abs(r_k - r_prev) <= settings.tau) {
      trace.iters.back().stop_reason = "tau";
      out.status = CcpStatus::converged;
      break;
    }
    r_prev = r_k;
  }
  if (out.status == CcpStatus::max_outer && !trace.iters.empty())
    trace.iters.back().stop_reason = "max_outer";

  if (!settings.trace_path.empty()) trace.write_csv(settings.trace_path);
  out.point = point;
  return out;
}

}  // namespace mcua
