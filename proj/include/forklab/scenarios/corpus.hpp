#pragma once

#include <string>
#include <vector>

#include "forklab/scenarios/config.hpp"

namespace forklab::scenarios {

// The shipped attack-script corpus: one scenario per (protocol, variant,
// attack) matrix cell, plus bare state-machine demos. The scenarios/ tree in
// the repository is generated from these definitions.
std::vector<ScenarioConfig> builtin_corpus();
std::vector<ScenarioConfig> demo_corpus();

std::vector<ScenarioConfig> load_corpus_dir(const std::string& dir);
void dump_corpus(const std::string& dir);

}  // namespace forklab::scenarios
