#pragma once

#include <string>

#include <json.hpp>

#include "ddisac/simkit.hpp"

namespace ddisac::cli {

// Keys mirror ExperimentPlan fields; missing keys keep their defaults, unknown keys are rejected.
// SNR points may be numbers or the string "inf". Throws ConfigError.
ExperimentPlan plan_from_json(const nlohmann::json& j);
nlohmann::json plan_to_json(const ExperimentPlan& plan);

ExperimentPlan load_plan(const std::string& path);

}  // namespace ddisac::cli
