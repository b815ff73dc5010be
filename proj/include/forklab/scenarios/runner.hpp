#pragma once

#include <string>
#include <vector>

#include "forklab/scenarios/config.hpp"

namespace forklab::scenarios {

struct ScenarioResult {
    AttackOutcome outcome;
    std::vector<std::string> log;
};

// Deterministic for a fixed config: same config, same bytes.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

struct TrialStats {
    uint64_t n = 0;
    uint64_t successes = 0;
    double frequency = 0.0;
    double wilson_low = 0.0;
    double wilson_high = 0.0;
};

// Per-trial independent sub-seeds; each trial is the protocol's unit random
// experiment (a contest round for the statistical protocols, a full attack
// run otherwise).
TrialStats run_trials(const ScenarioConfig& cfg, uint64_t n);

struct WilsonInterval {
    double low = 0.0;
    double high = 0.0;
};
WilsonInterval wilson95(uint64_t successes, uint64_t n);

// --- Matrix ------------------------------------------------------------------

enum class Cell { AttackSucceeds, AttackFails, NotApplicable };
std::string_view to_string(Cell c);

struct MatrixCell {
    Cell value = Cell::NotApplicable;
    std::string evidence;
};

struct MatrixRow {
    std::string protocol;
    Variant variant = Variant::Vulnerable;
    MatrixCell rollback;
    MatrixCell cloning;
};

struct MatrixReport {
    std::vector<MatrixRow> rows;
};

// Every implemented (protocol, variant) row, in catalog order.
const std::vector<std::pair<std::string, Variant>>& matrix_rows();

// Runs the corpus and assembles the matrix; every row needs a config for
// both attack kinds or the corpus is incomplete.
MatrixReport run_matrix(const std::vector<ScenarioConfig>& corpus);

// The qualitative reference result the shipped corpus must reproduce.
MatrixReport expected_matrix();
bool matrix_cells_equal(const MatrixReport& a, const MatrixReport& b);

// Known protocol ids (matrix protocols plus raw_sm).
const std::vector<std::string>& protocol_ids();

}  // namespace forklab::scenarios
