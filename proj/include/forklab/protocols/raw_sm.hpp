#pragma once

#include "forklab/protocols/common.hpp"
#include "forklab/scenarios/config.hpp"

namespace forklab::protocols::raw_sm {

// Bare state-machine demonstrations of the two forking vectors, driven by a
// declarative action script against the counter or flip contract.
AttackScript parse_script(const scenarios::json& steps, const std::string& program,
                          AttackKind kind);

AttackOutcome run(Simulation& sim, const scenarios::ScenarioConfig& cfg);

}  // namespace forklab::protocols::raw_sm
