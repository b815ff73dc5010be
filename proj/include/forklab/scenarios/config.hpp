#pragma once

#include <optional>
#include <set>
#include <string>

#include "json.hpp"

#include "forklab/host.hpp"
#include "forklab/ledger.hpp"

namespace forklab::scenarios {

using json = nlohmann::ordered_json;

// One scenario file: fully determines a run. Unknown fields are rejected so
// corpus files cannot silently drift.
struct ScenarioConfig {
    std::string name;
    std::string protocol;
    Variant variant = Variant::Vulnerable;
    AttackKind attack = AttackKind::Rollback;
    uint64_t seed = 1;
    uint64_t trials = 1000;
    ConsensusMode consensus = FinalMode{1000};
    json params = json::object();  // protocol knobs and mitigation overrides
    std::optional<bool> expect_succeeded;
    std::optional<std::string> expect_evidence;
    json script = json::array();  // raw_sm action list
};

ScenarioConfig parse_scenario(const json& j, const std::string& where = "scenario");
ScenarioConfig load_scenario_file(const std::string& path);
json scenario_to_json(const ScenarioConfig& cfg);

// Strict accessor for params objects: every key must be consumed.
class ParamReader {
public:
    ParamReader(const json& obj, std::string path);
    uint64_t u64(const std::string& key, uint64_t fallback);
    double f64(const std::string& key, double fallback);
    bool boolean(const std::string& key, bool fallback);
    std::string str(const std::string& key, const std::string& fallback);
    bool has(const std::string& key) const { return obj_.contains(key); }
    // Call after reading everything; throws ConfigError on unknown keys.
    void finish();

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace forklab::scenarios
