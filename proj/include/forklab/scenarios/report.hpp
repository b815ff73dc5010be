#pragma once

#include <string>

#include "forklab/scenarios/runner.hpp"

namespace forklab::scenarios {

enum class ReportFormat { Json, Markdown, Csv };
ReportFormat format_from_string(const std::string& s);

// Deterministic renderings: the same report always produces the same bytes.
std::string render_matrix(const MatrixReport& report, ReportFormat format);
std::string render_scenario(const ScenarioConfig& cfg, const ScenarioResult& result,
                            ReportFormat format);
std::string render_trials(const ScenarioConfig& cfg, const TrialStats& stats,
                          ReportFormat format);

void write_file(const std::string& path, const std::string& content);

}  // namespace forklab::scenarios
