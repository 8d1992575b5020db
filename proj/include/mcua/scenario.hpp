// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mcua {

// Hard floor on user-to-mBS distance; placements closer than this are
// resampled (or rejected, for fixed lists) to keep d^-alpha finite.
inline constexpr double kMinSeparationM = 1.0;

struct InfeasibleGeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ChannelParams {
  double bandwidth_hz = 100e6;           // W
  double path_loss_exp = 2.0;            // alpha
  double wavelength_m = 5e-3;            // lambda
  double noise_psd_dbm_per_hz = -174.0;  // sigma
  double p_min_mw = 0.0;
  double p_max_mw = 1000.0;
  double r_min_bps = 100e6;              // per-user QoS floor

  void validate() const;
  // AWGN power spectral density in mW/Hz (the one dBm->mW conversion).
  double noise_psd_mw_per_hz() const;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

double dist(const Point2& a, const Point2& b);

struct Placement {
  std::vector<Point2> mbs_xy;
  std::vector<Point2> user_xy;
  double area_side_m = 100.0;
  double coverage_radius_m = std::numeric_limits<double>::infinity();

  int num_mbs() const { return static_cast<int>(mbs_xy.size()); }
  int num_users() const { return static_cast<int>(user_xy.size()); }
  double distance(int user, int mbs) const;
  bool covers(int user, int mbs) const;
  // Throws InfeasibleGeometryError / std::invalid_argument on bad geometry:
  // out-of-area points, separation below kMinSeparationM, uncovered users,
  // userless mBSs.
  void validate() const;
};

enum class PlacementMode { fixed_list, binomial_process };

enum class FadingMode { deterministic_unit, exponential_unit_mean };

struct FadingModel {
  FadingMode mode = FadingMode::deterministic_unit;
  std::uint64_t seed = 0;
};

// Immutable after construction; safe for concurrent reads.
struct Scenario {
  ChannelParams params;
  Placement placement;
  Eigen::MatrixXd gain_h;     // n x m, h_ij > 0
  Eigen::MatrixXd snr_coeff;  // n x m, c_ij in 1/mW; gamma_ij = c_ij * p_ij
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> in_coverage;

  int num_users() const { return static_cast<int>(snr_coeff.rows()); }
  int num_mbs() const { return static_cast<int>(snr_coeff.cols()); }
};

// Draws a placement. In binomial mode, mBSs are uniform on the area and the
// n user points are i.i.d. uniform conditioned on being covered by at least
// one mBS (and at least kMinSeparationM from every mBS); the whole user set
// is redrawn until every mBS covers at least one user. Bounded retries;
// exhaustion raises InfeasibleGeometryError. In fixed_list mode the supplied
// coordinates are validated and returned verbatim.
Placement generate_placement(int m, int n, double area_side_m,
                             double coverage_radius_m, PlacementMode mode,
                             std::uint64_t seed,
                             const std::vector<Point2>& mbs_xy = {},
                             const std::vector<Point2>& user_xy = {});

// Redraws the users of an existing placement (mBSs kept), with a possibly
// different user count or coverage radius. Same conditioning and retry
// semantics as generate_placement.
Placement resample_users(const Placement& base, int n, std::uint64_t seed);

Scenario build_scenario(const ChannelParams& params, const Placement& placement,
                        const FadingModel& fading);

// Per-user downlink rates in bit/s. Accepts relaxed x in [0,1]; each mBS's
// spectrum is shared in proportion 1/sum_i x_ij. Users with an all-zero
// association row get exactly 0.
Eigen::VectorXd user_rates(const Scenario& scn, const Eigen::MatrixXd& x,
                           const Eigen::MatrixXd& p_mw);

}  // namespace mcua
