// SPDX-License-Identifier: Apache-2.0
#include "mcua/baselines.hpp"

#include <algorithm>
#include <random>

#include "mcua/ccp.hpp"

namespace mcua {

Solution pop_ua_pa(const Scenario& scn, const InstanceConfig& cfg,
                   int max_assoc) {
  if (max_assoc < 1) throw std::invalid_argument("max_assoc must be >= 1");
  InstanceConfig local = cfg;
  local.max_assoc = max_assoc;
  const Eigen::MatrixXd x = nearest_association(scn, max_assoc);
  return reoptimize_power(scn, local, x);
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t worker) {
  std::uint64_t z = seed ^ ((worker + 1) * 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

constexpr int kAssocRejections = 200;

bool association_ok(const Eigen::MatrixXd& x, int L) {
  for (int i = 0; i < x.rows(); ++i) {
    const double r = x.row(i).sum();
    if (r < 1.0 || r > L) return false;
  }
  for (int j = 0; j < x.cols(); ++j)
    if (x.col(j).sum() < 1.0) return false;
  return true;
}

// Randomized in-place repair of a binary association draw.
void repair_association(const Scenario& scn, int L, Eigen::MatrixXd& x,
                        std::mt19937_64& rng) {
  const int n = scn.num_users();
  const int m = scn.num_mbs();
  auto pick = [&](const std::vector<int>& v) {
    return v[std::uniform_int_distribution<int>(0, static_cast<int>(v.size()) - 1)(rng)];
  };
  for (int i = 0; i < n; ++i) {
    std::vector<int> ones;
    for (int j = 0; j < m; ++j)
      if (x(i, j) == 1.0) ones.push_back(j);
    while (static_cast<int>(ones.size()) > L) {
      const int k = std::uniform_int_distribution<int>(
          0, static_cast<int>(ones.size()) - 1)(rng);
      x(i, ones[k]) = 0.0;
      ones.erase(ones.begin() + k);
    }
    if (ones.empty()) {
      std::vector<int> cov;
      for (int j = 0; j < m; ++j)
        if (scn.in_coverage(i, j)) cov.push_back(j);
      if (cov.empty()) throw InfeasibleInstanceError("uncovered user in sampler");
      x(i, pick(cov)) = 1.0;
    }
  }
  for (int j = 0; j < m; ++j) {
    if (x.col(j).sum() >= 1.0) continue;
    std::vector<int> cands;
    for (int i = 0; i < n; ++i)
      if (scn.in_coverage(i, j)) cands.push_back(i);
    if (cands.empty()) throw InfeasibleInstanceError("userless mBS in sampler");
    std::shuffle(cands.begin(), cands.end(), rng);
    bool done = false;
    for (int i : cands) {
      if (x.row(i).sum() < L) {
        x(i, j) = 1.0;
        done = true;
        break;
      }
      std::vector<int> removable;
      for (int j2 = 0; j2 < m; ++j2)
        if (j2 != j && x(i, j2) == 1.0 && x.col(j2).sum() >= 2.0)
          removable.push_back(j2);
      if (!removable.empty()) {
        x(i, pick(removable)) = 0.0;
        x(i, j) = 1.0;
        done = true;
        break;
      }
    }
    if (!done)
      throw InfeasibleInstanceError("sampler repair failed for mBS " +
                                    std::to_string(j));
  }
}

}  // namespace

void random_feasible(const Scenario& scn, const InstanceConfig& cfg, int count,
                     std::uint64_t seed,
                     const std::function<void(int, const SampleDraw&)>& sink) {
  const int n = scn.num_users();
  const int m = scn.num_mbs();
  cfg.validate(n, m);
  if (count < 0) throw std::invalid_argument("count must be >= 0");
  const int L = cfg.effective_max_assoc(m);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_real_distribution<double> pbox(scn.params.p_min_mw,
                                              scn.params.p_max_mw);

  for (int d = 0; d < count; ++d) {
    Eigen::MatrixXd x(n, m);
    bool ok = false;
    for (int attempt = 0; attempt < kAssocRejections && !ok; ++attempt) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
          x(i, j) = scn.in_coverage(i, j) && coin(rng) < 0.5 ? 1.0 : 0.0;
      ok = association_ok(x, L);
    }
    if (!ok) repair_association(scn, L, x, rng);

    Eigen::MatrixXd p(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) p(i, j) = pbox(rng);
    for (int j = 0; j < m; ++j) {
      double load = 0.0, assoc = 0.0;
      for (int i = 0; i < n; ++i)
        if (x(i, j) == 1.0) {
          load += p(i, j);
          assoc += 1.0;
        }
      const double pmax = scn.params.p_max_mw;
      const double pmin = scn.params.p_min_mw;
      if (load > pmax) {
        // Scale the part above the per-link floor so the box stays honored.
        const double base = assoc * pmin;
        if (base >= pmax)
          throw InfeasibleInstanceError("per-link floor exceeds mBS budget");
        const double scale = (pmax - base) / (load - base) * (1.0 - 1e-12);
        for (int i = 0; i < n; ++i)
          if (x(i, j) == 1.0) p(i, j) = pmin + (p(i, j) - pmin) * scale;
      }
    }

    SampleDraw draw;
    draw.solution = Solution{std::move(x), std::move(p), true};
    draw.objective_bps = weighted_objective(scn, cfg, draw.solution);
    const Eigen::VectorXd rates =
        user_rates(scn, draw.solution.x, draw.solution.p_mw);
    draw.meets_qos = (rates.array() >= scn.params.r_min_bps).all();
    sink(d, draw);
  }
}

std::vector<SampleDraw> random_feasible(const Scenario& scn,
                                        const InstanceConfig& cfg, int count,
                                        std::uint64_t seed) {
  std::vector<SampleDraw> out;
  out.reserve(count);
  random_feasible(scn, cfg, count, seed,
                  [&](int, const SampleDraw& d) { out.push_back(d); });
  return out;
}

}  // namespace mcua
