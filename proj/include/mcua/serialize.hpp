// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <string>

#include "mcua/model.hpp"
#include "mcua/scenario.hpp"

namespace mcua {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);  // row-major nested
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

nlohmann::json scenario_to_json(const Scenario& scn);
Scenario scenario_from_json(const nlohmann::json& j);

nlohmann::json solution_to_json(const Solution& sol);
Solution solution_from_json(const nlohmann::json& j);

nlohmann::json lifted_to_json(const LiftedPoint& pt);
LiftedPoint lifted_from_json(const nlohmann::json& j);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace mcua
