// SPDX-License-Identifier: Apache-2.0
#include "mcua/serialize.hpp"

#include <fstream>

namespace mcua {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) return Eigen::MatrixXd(0, 0);
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const json& row = j.at(i);
    if (static_cast<int>(row.size()) != cols)
      throw std::invalid_argument("ragged matrix in JSON");
    for (int c = 0; c < cols; ++c) m(i, c) = row.at(c).get<double>();
  }
  return m;
}

namespace {

json points_to_json(const std::vector<Point2>& pts) {
  json out = json::array();
  for (const Point2& p : pts) out.push_back({p.x, p.y});
  return out;
}

std::vector<Point2> points_from_json(const json& j) {
  std::vector<Point2> pts;
  for (const json& e : j) pts.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
  return pts;
}

json radius_to_json(double r) {
  if (std::isinf(r)) return "inf";
  return r;
}

double radius_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf")
      return std::numeric_limits<double>::infinity();
    throw std::invalid_argument("coverage_radius_m must be a number or \"inf\"");
  }
  return j.get<double>();
}

}  // namespace

json scenario_to_json(const Scenario& scn) {
  json j;
  j["params"] = {{"bandwidth_hz", scn.params.bandwidth_hz},
                 {"path_loss_exp", scn.params.path_loss_exp},
                 {"wavelength_m", scn.params.wavelength_m},
                 {"noise_psd_dbm_per_hz", scn.params.noise_psd_dbm_per_hz},
                 {"p_min_mw", scn.params.p_min_mw},
                 {"p_max_mw", scn.params.p_max_mw},
                 {"r_min_bps", scn.params.r_min_bps}};
  j["placement"] = {{"mbs_xy", points_to_json(scn.placement.mbs_xy)},
                    {"user_xy", points_to_json(scn.placement.user_xy)},
                    {"area_side_m", scn.placement.area_side_m},
                    {"coverage_radius_m",
                     radius_to_json(scn.placement.coverage_radius_m)}};
  j["gain_h"] = matrix_to_json(scn.gain_h);
  j["snr_coeff"] = matrix_to_json(scn.snr_coeff);
  json cov = json::array();
  for (int i = 0; i < scn.num_users(); ++i) {
    json row = json::array();
    for (int c = 0; c < scn.num_mbs(); ++c)
      row.push_back(static_cast<bool>(scn.in_coverage(i, c)));
    cov.push_back(std::move(row));
  }
  j["in_coverage"] = std::move(cov);
  return j;
}

Scenario scenario_from_json(const json& j) {
  Scenario scn;
  const json& p = j.at("params");
  scn.params.bandwidth_hz = p.at("bandwidth_hz").get<double>();
  scn.params.path_loss_exp = p.at("path_loss_exp").get<double>();
  scn.params.wavelength_m = p.at("wavelength_m").get<double>();
  scn.params.noise_psd_dbm_per_hz = p.at("noise_psd_dbm_per_hz").get<double>();
  scn.params.p_min_mw = p.at("p_min_mw").get<double>();
  scn.params.p_max_mw = p.at("p_max_mw").get<double>();
  scn.params.r_min_bps = p.at("r_min_bps").get<double>();
  const json& pl = j.at("placement");
  scn.placement.mbs_xy = points_from_json(pl.at("mbs_xy"));
  scn.placement.user_xy = points_from_json(pl.at("user_xy"));
  scn.placement.area_side_m = pl.at("area_side_m").get<double>();
  scn.placement.coverage_radius_m = radius_from_json(pl.at("coverage_radius_m"));
  scn.gain_h = matrix_from_json(j.at("gain_h"));
  scn.snr_coeff = matrix_from_json(j.at("snr_coeff"));
  const json& cov = j.at("in_coverage");
  const int n = scn.placement.num_users();
  const int m = scn.placement.num_mbs();
  scn.in_coverage.resize(n, m);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < m; ++c)
      scn.in_coverage(i, c) = cov.at(i).at(c).get<bool>();
  if (scn.gain_h.rows() != n || scn.gain_h.cols() != m ||
      scn.snr_coeff.rows() != n || scn.snr_coeff.cols() != m)
    throw std::invalid_argument("scenario JSON matrices do not match placement");
  return scn;
}

json solution_to_json(const Solution& sol) {
  return {{"x", matrix_to_json(sol.x)},
          {"p_mw", matrix_to_json(sol.p_mw)},
          {"integral", sol.integral}};
}

Solution solution_from_json(const json& j) {
  return Solution{matrix_from_json(j.at("x")), matrix_from_json(j.at("p_mw")),
                  j.at("integral").get<bool>()};
}

json lifted_to_json(const LiftedPoint& pt) {
  return {{"x", matrix_to_json(pt.x)},
          {"p_mw", matrix_to_json(pt.p_mw)},
          {"u", matrix_to_json(pt.u)},
          {"v", matrix_to_json(pt.v)}};
}

LiftedPoint lifted_from_json(const json& j) {
  return LiftedPoint{matrix_from_json(j.at("x")), matrix_from_json(j.at("p_mw")),
                     matrix_from_json(j.at("u")), matrix_from_json(j.at("v"))};
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << j.dump(2) << "\n";
}

json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return json::parse(is);
}

}  // namespace mcua
