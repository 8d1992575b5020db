// SPDX-License-Identifier: Apache-2.0
//
// Independent oracles for the test suites. Everything here recomputes
// expected values through a different route than the library code paths it
// checks: closed forms, bisection, brute-force enumeration, finite
// differences.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mcua/model.hpp"
#include "mcua/recover.hpp"
#include "mcua/scenario.hpp"

namespace oracle {

// Weighted water-filling with per-link boxes by bisection on the level nu:
// maximize sum w_i log2(1 + c_i p_i) with sum p_i <= budget, 0 <= p_i <= box.
// p_i(nu) = clamp(w_i / nu - 1 / c_i, 0, box) is nonincreasing in nu.
struct WaterFill {
  Eigen::VectorXd p;
  double objective_log2 = 0.0;  // sum w_i log2(1 + c_i p_i)
};

inline WaterFill water_filling(const Eigen::VectorXd& c,
                               const Eigen::VectorXd& w, double budget,
                               double box) {
  const int k = static_cast<int>(c.size());
  auto alloc = [&](double nu) {
    Eigen::VectorXd p(k);
    for (int i = 0; i < k; ++i)
      p(i) = std::clamp(w(i) / nu - 1.0 / c(i), 0.0, box);
    return p;
  };
  WaterFill out;
  if (k * box <= budget) {
    out.p = Eigen::VectorXd::Constant(k, box);
  } else {
    double lo = 1e-12, hi = 1e12;
    for (int it = 0; it < 200; ++it) {
      const double mid = std::sqrt(lo * hi);
      if (alloc(mid).sum() > budget)
        lo = mid;
      else
        hi = mid;
    }
    out.p = alloc(std::sqrt(lo * hi));
  }
  for (int i = 0; i < k; ++i)
    out.objective_log2 += w(i) * std::log2(1.0 + c(i) * out.p(i));
  return out;
}

// Brute force over every binary association satisfying row/column coverage
// and the row cap; powers via reoptimize_power on each pattern. Intended
// for n*m <= ~12.
struct ExhaustiveBest {
  double objective_bps = -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd x;
  int feasible_patterns = 0;
};

inline ExhaustiveBest exhaustive_best(const mcua::Scenario& scn,
                                      const mcua::InstanceConfig& cfg) {
  const int n = scn.num_users();
  const int m = scn.num_mbs();
  const int nm = n * m;
  const int L = cfg.effective_max_assoc(m);
  ExhaustiveBest best;
  for (long mask = 0; mask < (1L << nm); ++mask) {
    Eigen::MatrixXd x(n, m);
    bool cover_ok = true;
    for (int i = 0; i < n && cover_ok; ++i)
      for (int j = 0; j < m; ++j) {
        x(i, j) = (mask >> (i * m + j)) & 1 ? 1.0 : 0.0;
        if (x(i, j) == 1.0 && !scn.in_coverage(i, j)) cover_ok = false;
      }
    if (!cover_ok) continue;
    bool ok = true;
    for (int i = 0; i < n; ++i) {
      const double r = x.row(i).sum();
      if (r < 1.0 || r > L) ok = false;
    }
    for (int j = 0; j < m; ++j)
      if (x.col(j).sum() < 1.0) ok = false;
    if (!ok) continue;
    ++best.feasible_patterns;
    const mcua::Solution sol = mcua::reoptimize_power(scn, cfg, x);
    const double obj = mcua::weighted_objective(scn, cfg, sol);
    if (obj > best.objective_bps) {
      best.objective_bps = obj;
      best.x = x;
    }
  }
  return best;
}

// Central-difference check of a smooth constraint's gradient and Hessian.
// Returns the worst relative mismatch across probed entries.
struct FdReport {
  double grad_err = 0.0;
  double hess_err = 0.0;
};

inline FdReport fd_check(const mcua::SmoothConstraint& con,
                         const Eigen::VectorXd& z, double h = 1e-5) {
  const int dim = static_cast<int>(z.size());
  FdReport rep;
  const Eigen::VectorXd g = con.grad(z);
  const Eigen::MatrixXd H = con.hess(z);
  for (int i : con.support()) {
    Eigen::VectorXd zp = z, zm = z;
    zp(i) += h;
    zm(i) -= h;
    const double fd = (con.eval(zp) - con.eval(zm)) / (2.0 * h);
    const double scale = std::max({1.0, std::abs(fd), std::abs(g(i))});
    rep.grad_err = std::max(rep.grad_err, std::abs(fd - g(i)) / scale);
    const Eigen::VectorXd gp = con.grad(zp), gm = con.grad(zm);
    for (int j = 0; j < dim; ++j) {
      const double fdH = (gp(j) - gm(j)) / (2.0 * h);
      const double s2 = std::max({1.0, std::abs(fdH), std::abs(H(i, j))});
      rep.hess_err = std::max(rep.hess_err, std::abs(fdH - H(i, j)) / s2);
    }
  }
  return rep;
}

// Deterministic scenario helpers for tests.
inline mcua::Scenario unit_scenario(double d_m = 10.0,
                                    double r_min_bps = 100e6) {
  mcua::ChannelParams params;
  params.r_min_bps = r_min_bps;
  mcua::Placement pl;
  pl.area_side_m = 100.0;
  pl.mbs_xy = {{50.0, 50.0}};
  pl.user_xy = {{50.0, 50.0 + d_m}};
  return mcua::build_scenario(params, pl,
                              {mcua::FadingMode::deterministic_unit, 0});
}

inline mcua::Scenario random_scenario(int n, int m, std::uint64_t seed,
                                      bool exponential = false,
                                      double coverage = 1e30) {
  mcua::ChannelParams params;
  const mcua::Placement pl = mcua::generate_placement(
      m, n, 100.0, coverage, mcua::PlacementMode::binomial_process, seed);
  const mcua::FadingModel fading{
      exponential ? mcua::FadingMode::exponential_unit_mean
                  : mcua::FadingMode::deterministic_unit,
      seed ^ 0xF00Dull};
  return mcua::build_scenario(params, pl, fading);
}

}  // namespace oracle
