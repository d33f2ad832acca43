#pragma once

#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "cogflow/cogspace.hpp"

namespace cogflow {

/// A list of {name, low_pole_text, high_pole_text}; index is positional.
nlohmann::json space_to_json(const CognitiveSpace& space);
CognitiveSpace space_from_json(const nlohmann::json& j);

nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

}  // namespace cogflow
