#include "forklab/scenarios/report.hpp"

#include <fstream>

#include "forklab/events.hpp"

namespace forklab::scenarios {

ReportFormat format_from_string(const std::string& s) {
    if (s == "json") return ReportFormat::Json;
    if (s == "md") return ReportFormat::Markdown;
    if (s == "csv") return ReportFormat::Csv;
    throw ForklabError(ErrorCode::ConfigError, "unknown format: " + s + " (want json|md|csv)");
}

namespace {

json evidence_json(const AttackOutcome& outcome) {
    json arr = json::array();
    for (const Evidence& e : outcome.evidence) {
        json item;
        item["kind"] = std::string(to_string(e.kind));
        json values;
        for (const auto& [k, v] : e.values) values[k] = v;
        item["values"] = values;
        arr.push_back(item);
    }
    return arr;
}

}  // namespace

std::string render_matrix(const MatrixReport& report, ReportFormat format) {
    if (format == ReportFormat::Json) {
        json rows = json::array();
        for (const MatrixRow& r : report.rows) {
            json row;
            row["protocol"] = r.protocol;
            row["variant"] = std::string(to_string(r.variant));
            row["rollback"] = std::string(to_string(r.rollback.value));
            row["rollback_evidence"] = r.rollback.evidence;
            row["cloning"] = std::string(to_string(r.cloning.value));
            row["cloning_evidence"] = r.cloning.evidence;
            rows.push_back(row);
        }
        json out;
        out["matrix"] = rows;
        return out.dump(2) + "\n";
    }
    if (format == ReportFormat::Csv) {
        std::string out = "protocol,variant,rollback,cloning\n";
        for (const MatrixRow& r : report.rows) {
            out += r.protocol + "," + std::string(to_string(r.variant)) + "," +
                   std::string(to_string(r.rollback.value)) + "," +
                   std::string(to_string(r.cloning.value)) + "\n";
        }
        return out;
    }
    std::string out = "| protocol | variant | rollback | cloning |\n";
    out += "|---|---|---|---|\n";
    for (const MatrixRow& r : report.rows) {
        out += "| " + r.protocol + " | " + std::string(to_string(r.variant)) + " | " +
               std::string(to_string(r.rollback.value)) + " | " +
               std::string(to_string(r.cloning.value)) + " |\n";
    }
    return out;
}

std::string render_scenario(const ScenarioConfig& cfg, const ScenarioResult& result,
                            ReportFormat format) {
    if (format == ReportFormat::Json) {
        json out;
        out["name"] = cfg.name;
        out["protocol"] = cfg.protocol;
        out["variant"] = std::string(to_string(cfg.variant));
        out["attack"] = std::string(to_string(cfg.attack));
        out["seed"] = cfg.seed;
        out["verdict"] = std::string(to_string(result.outcome.verdict));
        out["evidence"] = evidence_json(result.outcome);
        out["log"] = result.log;
        return out.dump(2) + "\n";
    }
    if (format == ReportFormat::Csv) {
        std::string out = "name,protocol,variant,attack,seed,verdict\n";
        out += cfg.name + "," + cfg.protocol + "," + std::string(to_string(cfg.variant)) + "," +
               std::string(to_string(cfg.attack)) + "," + std::to_string(cfg.seed) + "," +
               std::string(to_string(result.outcome.verdict)) + "\n";
        return out;
    }
    std::string out = "# " + cfg.name + "\n\n";
    out += "- protocol: " + cfg.protocol + "\n";
    out += "- variant: " + std::string(to_string(cfg.variant)) + "\n";
    out += "- attack: " + std::string(to_string(cfg.attack)) + "\n";
    out += "- seed: " + std::to_string(cfg.seed) + "\n";
    out += "- verdict: " + std::string(to_string(result.outcome.verdict)) + "\n";
    if (!result.outcome.evidence.empty()) {
        out += "- evidence:\n";
        for (const Evidence& e : result.outcome.evidence) {
            out += "  - " + std::string(to_string(e.kind));
            for (const auto& [k, v] : e.values) out += " " + k + "=" + v;
            out += "\n";
        }
    }
    out += "\n## Event log\n\n```\n";
    for (const auto& line : result.log) out += line + "\n";
    out += "```\n";
    return out;
}

std::string render_trials(const ScenarioConfig& cfg, const TrialStats& stats,
                          ReportFormat format) {
    if (format == ReportFormat::Json) {
        json out;
        out["name"] = cfg.name;
        out["protocol"] = cfg.protocol;
        out["variant"] = std::string(to_string(cfg.variant));
        out["attack"] = std::string(to_string(cfg.attack));
        out["seed"] = cfg.seed;
        out["trials"] = stats.n;
        out["successes"] = stats.successes;
        out["frequency"] = ev_f64(stats.frequency);
        out["wilson95_low"] = ev_f64(stats.wilson_low);
        out["wilson95_high"] = ev_f64(stats.wilson_high);
        return out.dump(2) + "\n";
    }
    if (format == ReportFormat::Csv) {
        std::string out = "name,trials,successes,frequency,wilson95_low,wilson95_high\n";
        out += cfg.name + "," + std::to_string(stats.n) + "," + std::to_string(stats.successes) +
               "," + ev_f64(stats.frequency) + "," + ev_f64(stats.wilson_low) + "," +
               ev_f64(stats.wilson_high) + "\n";
        return out;
    }
    std::string out = "# " + cfg.name + " (trials)\n\n";
    out += "- trials: " + std::to_string(stats.n) + "\n";
    out += "- successes: " + std::to_string(stats.successes) + "\n";
    out += "- frequency: " + ev_f64(stats.frequency) + "\n";
    out += "- wilson95: [" + ev_f64(stats.wilson_low) + ", " + ev_f64(stats.wilson_high) + "]\n";
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ForklabError(ErrorCode::IoError, "cannot write file: " + path);
    out << content;
    if (!out) throw ForklabError(ErrorCode::IoError, "write failed: " + path);
}

}  // namespace forklab::scenarios
