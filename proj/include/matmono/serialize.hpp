#pragma once

#include <string>

#include "matmono/harness.hpp"
#include "matmono/model.hpp"

namespace matmono::serialize {

/// Scenario documents use schema "matmono-scenario-1": complex matrices are
/// nested arrays of [re, im] pairs, doubles survive a round trip bit-exactly.
/// Schur-function objectives reference entries of a small named registry.
std::string scenario_to_json(const model::Scenario& s);
model::Scenario scenario_from_json(const std::string& text);

std::string solution_to_json(const model::PrecoderSolution& sol, double objective_value);

std::string experiment_to_json(const harness::ExperimentConfig& cfg);
harness::ExperimentConfig experiment_from_json(const std::string& text);

/// Named Schur handles available to JSON scenarios.
model::ScalarVectorFn named_schur(const std::string& name);

} // namespace matmono::serialize
