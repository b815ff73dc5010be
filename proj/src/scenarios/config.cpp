#include "forklab/scenarios/config.hpp"

#include <fstream>

namespace forklab::scenarios {

namespace {

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object())
        throw ForklabError(ErrorCode::ConfigError, where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key))
            throw ForklabError(ErrorCode::ConfigError, where + ": unknown field '" + key + "'");
    }
}

ConsensusMode parse_consensus(const json& j, const std::string& where) {
    require_keys(j, {"mode", "block_interval_ms", "fork_probability", "confirmation_depth"},
                 where);
    if (!j.contains("mode"))
        throw ForklabError(ErrorCode::ConfigError, where + ".mode: missing");
    std::string mode = j.at("mode").get<std::string>();
    if (mode == "final") {
        FinalMode m;
        if (j.contains("block_interval_ms")) m.block_interval_ms = j.at("block_interval_ms").get<uint64_t>();
        if (j.contains("fork_probability") || j.contains("confirmation_depth"))
            throw ForklabError(ErrorCode::ConfigError, where + ": fork fields invalid in final mode");
        return m;
    }
    if (mode == "eventual") {
        EventualMode m;
        if (j.contains("block_interval_ms")) m.block_interval_ms = j.at("block_interval_ms").get<uint64_t>();
        if (j.contains("fork_probability")) m.fork_probability = j.at("fork_probability").get<double>();
        if (j.contains("confirmation_depth")) m.confirmation_depth = j.at("confirmation_depth").get<uint32_t>();
        return m;
    }
    throw ForklabError(ErrorCode::ConfigError, where + ".mode: expected 'final' or 'eventual'");
}

}  // namespace

ScenarioConfig parse_scenario(const json& j, const std::string& where) {
    require_keys(j,
                 {"name", "protocol", "variant", "attack", "seed", "trials", "consensus", "params",
                  "expect", "script"},
                 where);
    ScenarioConfig cfg;
    auto need = [&](const char* key) -> const json& {
        if (!j.contains(key))
            throw ForklabError(ErrorCode::ConfigError, where + "." + key + ": missing");
        return j.at(key);
    };
    cfg.name = need("name").get<std::string>();
    cfg.protocol = need("protocol").get<std::string>();
    cfg.variant = variant_from_string(need("variant").get<std::string>());
    cfg.attack = attack_kind_from_string(need("attack").get<std::string>());
    cfg.seed = need("seed").get<uint64_t>();
    if (j.contains("trials")) cfg.trials = j.at("trials").get<uint64_t>();
    if (j.contains("consensus")) cfg.consensus = parse_consensus(j.at("consensus"), where + ".consensus");
    if (j.contains("params")) {
        if (!j.at("params").is_object())
            throw ForklabError(ErrorCode::ConfigError, where + ".params: expected an object");
        cfg.params = j.at("params");
    }
    if (j.contains("expect")) {
        const json& e = j.at("expect");
        require_keys(e, {"succeeded", "evidence"}, where + ".expect");
        if (e.contains("succeeded")) cfg.expect_succeeded = e.at("succeeded").get<bool>();
        if (e.contains("evidence")) cfg.expect_evidence = e.at("evidence").get<std::string>();
    }
    if (j.contains("script")) {
        if (!j.at("script").is_array())
            throw ForklabError(ErrorCode::ConfigError, where + ".script: expected an array");
        cfg.script = j.at("script");
    }
    return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ForklabError(ErrorCode::IoError, "cannot open scenario file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ForklabError(ErrorCode::ConfigError, path + ": " + e.what());
    }
    return parse_scenario(j, path);
}

json scenario_to_json(const ScenarioConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    j["protocol"] = cfg.protocol;
    j["variant"] = std::string(to_string(cfg.variant));
    j["attack"] = std::string(to_string(cfg.attack));
    j["seed"] = cfg.seed;
    j["trials"] = cfg.trials;
    json c;
    if (const auto* f = std::get_if<FinalMode>(&cfg.consensus)) {
        c["mode"] = "final";
        c["block_interval_ms"] = f->block_interval_ms;
    } else {
        const auto& e = std::get<EventualMode>(cfg.consensus);
        c["mode"] = "eventual";
        c["block_interval_ms"] = e.block_interval_ms;
        c["fork_probability"] = e.fork_probability;
        c["confirmation_depth"] = e.confirmation_depth;
    }
    j["consensus"] = c;
    if (!cfg.params.empty()) j["params"] = cfg.params;
    if (cfg.expect_succeeded || cfg.expect_evidence) {
        json e;
        if (cfg.expect_succeeded) e["succeeded"] = *cfg.expect_succeeded;
        if (cfg.expect_evidence) e["evidence"] = *cfg.expect_evidence;
        j["expect"] = e;
    }
    if (!cfg.script.empty()) j["script"] = cfg.script;
    return j;
}

ParamReader::ParamReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object())
        throw ForklabError(ErrorCode::ConfigError, path_ + ": expected an object");
}

uint64_t ParamReader::u64(const std::string& key, uint64_t fallback) {
    seen_.insert(key);
    if (!obj_.contains(key)) return fallback;
    return obj_.at(key).get<uint64_t>();
}

double ParamReader::f64(const std::string& key, double fallback) {
    seen_.insert(key);
    if (!obj_.contains(key)) return fallback;
    return obj_.at(key).get<double>();
}

bool ParamReader::boolean(const std::string& key, bool fallback) {
    seen_.insert(key);
    if (!obj_.contains(key)) return fallback;
    return obj_.at(key).get<bool>();
}

std::string ParamReader::str(const std::string& key, const std::string& fallback) {
    seen_.insert(key);
    if (!obj_.contains(key)) return fallback;
    return obj_.at(key).get<std::string>();
}

void ParamReader::finish() {
    for (const auto& [key, value] : obj_.items()) {
        (void)value;
        if (!seen_.count(key))
            throw ForklabError(ErrorCode::ConfigError, path_ + ": unknown field '" + key + "'");
    }
}

}  // namespace forklab::scenarios
