#include "forklab/protocols/raw_sm.hpp"

#include "forklab/codec.hpp"

namespace forklab::protocols::raw_sm {

namespace {

Input parse_input(const scenarios::json& j, const std::string& program) {
    if (!j.is_object())
        throw ForklabError(ErrorCode::ConfigError, "script input: expected an object");
    std::string op = j.at("op").get<std::string>();
    if (program == "counter") {
        int64_t value = j.contains("value") ? j.at("value").get<int64_t>() : 0;
        if (op == "add") return counter_add(value);
        if (op == "set") return counter_set(value);
    } else if (program == "flip") {
        if (op == "toggle") return flip_toggle();
        if (op == "get") return flip_get();
    } else if (program == "mixer") {
        if (op == "mix") {
            std::vector<Bytes> items;
            for (const auto& item : j.at("items")) items.push_back(to_bytes(item.get<std::string>()));
            return mixer_request(items);
        }
    }
    throw ForklabError(ErrorCode::ConfigError, "script input: unknown op '" + op + "'");
}

}  // namespace

AttackScript parse_script(const scenarios::json& steps, const std::string& program,
                          AttackKind kind) {
    AttackScript script;
    script.kind = kind;
    for (const auto& j : steps) {
        if (!j.is_object())
            throw ForklabError(ErrorCode::ConfigError, "script step: expected an object");
        std::string action = j.at("action").get<std::string>();
        size_t instance = j.contains("instance") ? j.at("instance").get<size_t>() : 0;
        ScriptStep step;
        if (j.contains("only_if_logged"))
            step.only_if_logged = j.at("only_if_logged").get<std::string>();
        if (action == "launch") {
            step.action = ActLaunch{j.contains("platform") ? j.at("platform").get<size_t>() : 0};
        } else if (action == "step") {
            step.action = ActStep{instance, parse_input(j.at("input"), program)};
        } else if (action == "seal") {
            step.action = ActSeal{instance};
        } else if (action == "restart") {
            std::optional<uint64_t> blob;
            if (j.contains("blob") && !j.at("blob").is_null()) blob = j.at("blob").get<uint64_t>();
            step.action = ActRestart{instance, blob};
        } else if (action == "clone") {
            std::optional<uint64_t> blob;
            if (j.contains("blob") && !j.at("blob").is_null()) blob = j.at("blob").get<uint64_t>();
            step.action = ActClone{instance, blob};
        } else if (action == "isolate") {
            step.action = ActIsolate{instance};
        } else if (action == "unisolate") {
            step.action = ActUnisolate{instance};
        } else if (action == "advance_time") {
            step.action = ActAdvanceTime{j.at("ms").get<uint64_t>()};
        } else {
            throw ForklabError(ErrorCode::ConfigError, "script step: unknown action '" + action + "'");
        }
        script.steps.push_back(std::move(step));
    }
    return script;
}

AttackOutcome run(Simulation& sim, const scenarios::ScenarioConfig& cfg) {
    scenarios::ParamReader params(cfg.params, cfg.name + ".params");
    std::string program_name = params.str("program", "counter");
    params.finish();

    EnclaveProgram program = program_name == "flip"    ? flip_program()
                             : program_name == "mixer" ? mitigations::stateless_wrap(mixer_program())
                                                       : counter_program();
    Measurement m = sim.tee().register_program(program);
    PlatformId platform = sim.tee().add_platform();

    AttackScript script = parse_script(cfg.script, program_name, cfg.attack);
    ScriptRunResult r = run_script(sim, m, {platform}, script);

    // The intended input sequence is every stepped input, in script order; a
    // never-restarted reference instance defines the unforked state.
    Handle reference = sim.tee().launch(platform, m);
    for (const ScriptStep& step : script.steps) {
        if (const auto* act = std::get_if<ActStep>(&step.action)) {
            sim.tee().step(reference, act->input);
        }
    }
    Digest reference_digest = sim.tee().state_digest(reference);

    AttackOutcome outcome;
    outcome.kind = cfg.attack;
    for (size_t i = 0; i < r.instances.size(); ++i) {
        sim.log().record("final_state", {{"instance", ev_u64(i)},
                                         {"handle", ev_u64(r.instances[i].value)},
                                         {"digest", ev_hex(sim.tee().state_digest(r.instances[i]))}});
    }
    sim.log().record("reference_state", {{"digest", ev_hex(reference_digest)}});

    if (cfg.attack == AttackKind::Rollback) {
        Digest got = sim.tee().state_digest(r.instances.at(0));
        if (got != reference_digest) {
            outcome.verdict = AttackOutcome::Verdict::Succeeded;
            sim.add_evidence(Evidence{EvidenceKind::RolledBackStateRestored,
                                      {{"expected", to_hex(reference_digest)},
                                       {"got", to_hex(got)}}});
        }
    } else if (cfg.attack == AttackKind::Cloning) {
        for (size_t i = 0; i < r.instances.size() && !outcome.succeeded(); ++i) {
            for (size_t j = i + 1; j < r.instances.size(); ++j) {
                Digest a = sim.tee().state_digest(r.instances[i]);
                Digest b = sim.tee().state_digest(r.instances[j]);
                if (a != b) {
                    outcome.verdict = AttackOutcome::Verdict::Succeeded;
                    sim.add_evidence(Evidence{EvidenceKind::ForkedStates,
                                              {{"a", to_hex(a)}, {"b", to_hex(b)}}});
                    break;
                }
            }
        }
    } else {
        outcome.verdict = AttackOutcome::Verdict::NotApplicable;
    }
    outcome.evidence = sim.evidence();
    sim.log().record("verdict", {{"attack", std::string(to_string(outcome.kind))},
                                 {"result", std::string(to_string(outcome.verdict))}});
    return outcome;
}

}  // namespace forklab::protocols::raw_sm
