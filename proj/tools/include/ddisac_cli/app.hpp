#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddisac/simkit.hpp"

namespace ddisac::cli {

// One channel draw from trial stream (seed, 0, 0): paths plus, per waveform, the time-domain
// and effective channel with their squared Frobenius norms.
nlohmann::json channel_dump(const ExperimentPlan& plan, bool with_matrices = true);

// Dictionary for a frame whose payload comes from trial stream (seed, 0, 0), restricted to the pilot block
// for single-pilot layouts.
nlohmann::json dictionary_dump(const ExperimentPlan& plan, bool with_matrices = true);

// Exit status: 0 success, 2 usage or configuration error, 1 runtime failure.
// Failures print one JSON object line on err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ddisac::cli
