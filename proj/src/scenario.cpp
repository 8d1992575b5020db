// SPDX-License-Identifier: Apache-2.0
#include "mcua/scenario.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace mcua {

namespace {

constexpr int kUserDrawTries = 64;   // per-user rejection budget
constexpr int kUserSetRetries = 64;  // full user-set redraws

std::string ij_str(int i, int j) {
  std::ostringstream os;
  os << "(" << i << "," << j << ")";
  return os.str();
}

}  // namespace

void ChannelParams::validate() const {
  if (!(bandwidth_hz > 0)) throw std::invalid_argument("bandwidth_hz must be > 0");
  if (!(wavelength_m > 0)) throw std::invalid_argument("wavelength_m must be > 0");
  if (!(path_loss_exp >= 0)) throw std::invalid_argument("path_loss_exp must be >= 0");
  if (!(p_min_mw >= 0)) throw std::invalid_argument("p_min_mw must be >= 0");
  if (!(p_max_mw > 0)) throw std::invalid_argument("p_max_mw must be > 0");
  if (!(p_min_mw <= p_max_mw)) throw std::invalid_argument("p_min_mw must be <= p_max_mw");
  if (!(r_min_bps >= 0)) throw std::invalid_argument("r_min_bps must be >= 0");
}

double ChannelParams::noise_psd_mw_per_hz() const {
  return std::pow(10.0, noise_psd_dbm_per_hz / 10.0);
}

double dist(const Point2& a, const Point2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

double Placement::distance(int user, int mbs) const {
  return dist(user_xy[user], mbs_xy[mbs]);
}

bool Placement::covers(int user, int mbs) const {
  return distance(user, mbs) <= coverage_radius_m;
}

void Placement::validate() const {
  if (num_mbs() < 1 || num_users() < 1)
    throw std::invalid_argument("placement needs at least one mBS and one user");
  if (!(area_side_m > 0)) throw std::invalid_argument("area_side_m must be > 0");
  auto in_area = [&](const Point2& p) {
    return p.x >= 0 && p.x <= area_side_m && p.y >= 0 && p.y <= area_side_m;
  };
  for (const Point2& p : mbs_xy)
    if (!in_area(p)) throw std::invalid_argument("mBS outside service area");
  for (const Point2& p : user_xy)
    if (!in_area(p)) throw std::invalid_argument("user outside service area");

  std::vector<bool> mbs_has_user(num_mbs(), false);
  for (int i = 0; i < num_users(); ++i) {
    bool covered = false;
    for (int j = 0; j < num_mbs(); ++j) {
      const double d = distance(i, j);
      if (d < kMinSeparationM)
        throw std::invalid_argument("user " + ij_str(i, j) +
                                    " closer than minimum separation to mBS");
      if (d <= coverage_radius_m) {
        covered = true;
        mbs_has_user[j] = true;
      }
    }
    if (!covered)
      throw InfeasibleGeometryError("user " + std::to_string(i) +
                                    " not covered by any mBS");
  }
  for (int j = 0; j < num_mbs(); ++j)
    if (!mbs_has_user[j])
      throw InfeasibleGeometryError("mBS " + std::to_string(j) +
                                    " covers no user");
}

namespace {

// Users i.i.d. uniform, each conditioned on being covered and separated;
// the set is accepted only if every mBS covers at least one user.
std::vector<Point2> draw_users(const std::vector<Point2>& mbs, int n,
                               double area, double radius, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, area);
  const int m = static_cast<int>(mbs.size());
  for (int attempt = 0; attempt < kUserSetRetries; ++attempt) {
    std::vector<Point2> users;
    users.reserve(n);
    bool set_ok = true;
    for (int i = 0; i < n && set_ok; ++i) {
      bool placed = false;
      for (int t = 0; t < kUserDrawTries; ++t) {
        Point2 cand{unif(rng), unif(rng)};
        bool covered = false, separated = true;
        for (const Point2& b : mbs) {
          const double d = dist(cand, b);
          if (d < kMinSeparationM) {
            separated = false;
            break;
          }
          if (d <= radius) covered = true;
        }
        if (separated && covered) {
          users.push_back(cand);
          placed = true;
          break;
        }
      }
      if (!placed) set_ok = false;
    }
    if (!set_ok) continue;
    std::vector<bool> has_user(m, false);
    for (const Point2& u : users)
      for (int j = 0; j < m; ++j)
        if (dist(u, mbs[j]) <= radius) has_user[j] = true;
    bool all = true;
    for (bool h : has_user) all = all && h;
    if (all) return users;
  }
  throw InfeasibleGeometryError(
      "user placement rejection sampling exhausted its retry budget");
}

}  // namespace

Placement generate_placement(int m, int n, double area_side_m,
                             double coverage_radius_m, PlacementMode mode,
                             std::uint64_t seed,
                             const std::vector<Point2>& mbs_xy,
                             const std::vector<Point2>& user_xy) {
  if (m < 1 || n < 1) throw std::invalid_argument("need m >= 1 and n >= 1");
  if (!(area_side_m > 0)) throw std::invalid_argument("area_side_m must be > 0");

  Placement pl;
  pl.area_side_m = area_side_m;
  pl.coverage_radius_m = coverage_radius_m;

  if (mode == PlacementMode::fixed_list) {
    if (static_cast<int>(mbs_xy.size()) != m || static_cast<int>(user_xy.size()) != n)
      throw std::invalid_argument("fixed_list mode requires m mBS and n user coordinates");
    pl.mbs_xy = mbs_xy;
    pl.user_xy = user_xy;
    pl.validate();
    return pl;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, area_side_m);
  pl.mbs_xy.reserve(m);
  for (int j = 0; j < m; ++j) pl.mbs_xy.push_back({unif(rng), unif(rng)});
  pl.user_xy = draw_users(pl.mbs_xy, n, area_side_m, coverage_radius_m, rng);
  return pl;
}

Placement resample_users(const Placement& base, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("need n >= 1");
  Placement pl = base;
  std::mt19937_64 rng(seed);
  pl.user_xy = draw_users(pl.mbs_xy, n, pl.area_side_m, pl.coverage_radius_m, rng);
  return pl;
}

Scenario build_scenario(const ChannelParams& params, const Placement& placement,
                        const FadingModel& fading) {
  params.validate();
  placement.validate();

  const int n = placement.num_users();
  const int m = placement.num_mbs();

  Scenario scn;
  scn.params = params;
  scn.placement = placement;
  scn.gain_h.resize(n, m);
  scn.snr_coeff.resize(n, m);
  scn.in_coverage.resize(n, m);

  std::mt19937_64 rng(fading.seed);
  std::exponential_distribution<double> expo(1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double h = 1.0;
      if (fading.mode == FadingMode::exponential_unit_mean) {
        do {
          h = expo(rng);
        } while (!(h > 0));
      }
      scn.gain_h(i, j) = h;
    }
  }

  const double aperture =
      std::pow(params.wavelength_m / (4.0 * std::numbers::pi), 2);
  const double noise_mw = params.bandwidth_hz * params.noise_psd_mw_per_hz();

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double d = placement.distance(i, j);
      if (d < kMinSeparationM)
        throw std::domain_error("distance below minimum separation at " + ij_str(i, j));
      const bool cover = d <= placement.coverage_radius_m;
      scn.in_coverage(i, j) = cover;
      double c = 0.0;
      if (cover) {
        c = std::pow(d, -params.path_loss_exp) * scn.gain_h(i, j) * aperture / noise_mw;
        if (!std::isfinite(c) || !(c > 0))
          throw std::domain_error("non-finite SNR coefficient at " + ij_str(i, j));
      }
      scn.snr_coeff(i, j) = c;
    }
  }
  return scn;
}

Eigen::VectorXd user_rates(const Scenario& scn, const Eigen::MatrixXd& x,
                           const Eigen::MatrixXd& p_mw) {
  const int n = scn.num_users();
  const int m = scn.num_mbs();
  if (x.rows() != n || x.cols() != m || p_mw.rows() != n || p_mw.cols() != m)
    throw std::invalid_argument("user_rates: dimension mismatch");

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      if (p_mw(i, j) < 0) throw std::domain_error("negative power at " + ij_str(i, j));
      if (x(i, j) < -1e-9 || x(i, j) > 1.0 + 1e-9)
        throw std::domain_error("association outside [0,1] at " + ij_str(i, j));
      if (!scn.in_coverage(i, j) && x(i, j) > 1e-9)
        throw std::invalid_argument("positive association outside coverage at " + ij_str(i, j));
    }
  }

  Eigen::VectorXd col_sum = Eigen::VectorXd::Zero(m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) col_sum(j) += std::clamp(x(i, j), 0.0, 1.0);

  const double w_hz = scn.params.bandwidth_hz;
  const double inv_ln2 = 1.0 / std::numbers::ln2;
  Eigen::VectorXd rates = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < m; ++j) {
    if (col_sum(j) <= 0) continue;
    for (int i = 0; i < n; ++i) {
      const double xi = std::clamp(x(i, j), 0.0, 1.0);
      if (xi <= 0) continue;
      const double se = std::log1p(scn.snr_coeff(i, j) * p_mw(i, j)) * inv_ln2;
      rates(i) += w_hz * xi * se / col_sum(j);
    }
  }
  return rates;
}

}  // namespace mcua
