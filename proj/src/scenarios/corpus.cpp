#include "forklab/scenarios/corpus.hpp"

#include <algorithm>
#include <filesystem>

#include "forklab/scenarios/report.hpp"

namespace forklab::scenarios {

namespace {

ScenarioConfig base(const std::string& protocol, Variant variant, AttackKind attack,
                    uint64_t seed, ConsensusMode mode) {
    ScenarioConfig cfg;
    cfg.protocol = protocol;
    cfg.variant = variant;
    cfg.attack = attack;
    cfg.seed = seed;
    cfg.consensus = mode;
    cfg.name = protocol + "_" + std::string(to_string(attack)) + "_" +
               std::string(to_string(variant));
    return cfg;
}

void expect(ScenarioConfig& cfg, bool succeeded, const std::string& evidence = "") {
    cfg.expect_succeeded = succeeded;
    if (!evidence.empty()) cfg.expect_evidence = evidence;
}

}  // namespace

std::vector<ScenarioConfig> builtin_corpus() {
    std::vector<ScenarioConfig> corpus;
    uint64_t seed = 7001;
    auto next_seed = [&seed] { return seed++; };

    // PoUW (REM): stateless, proofs bound to the current block.
    {
        ConsensusMode mode = FinalMode{12000};
        json params = {{"diff", 0.2}, {"instruction_count", 1}, {"clones", 4}, {"rounds", 2000}};
        auto rb_v = base("pouw", Variant::Vulnerable, AttackKind::Rollback, next_seed(), mode);
        rb_v.params = params;
        expect(rb_v, false, "StaleAnchorRejected");
        auto cl_v = base("pouw", Variant::Vulnerable, AttackKind::Cloning, next_seed(), mode);
        cl_v.params = params;
        cl_v.trials = 10000;
        expect(cl_v, true, "ProposerAdvantage");
        auto rb_p = base("pouw", Variant::Patched, AttackKind::Rollback, next_seed(), mode);
        rb_p.params = params;
        expect(rb_p, false, "StaleAnchorRejected");
        auto cl_p = base("pouw", Variant::Patched, AttackKind::Cloning, next_seed(), mode);
        cl_p.params = params;
        cl_p.trials = 10000;
        expect(cl_p, false, "UnregisteredIdRejected");
        corpus.insert(corpus.end(), {rb_v, cl_v, rb_p, cl_p});
    }

    // Proof of Luck: monotonic counters serialize the round.
    {
        ConsensusMode mode = FinalMode{1000};
        json params = {{"clones", 2}};
        auto rb = base("proof_of_luck", Variant::Vulnerable, AttackKind::Rollback, next_seed(), mode);
        rb.params = params;
        expect(rb, false, "StaleAnchorRejected");
        auto cl = base("proof_of_luck", Variant::Vulnerable, AttackKind::Cloning, next_seed(), mode);
        cl.params = params;
        expect(cl, false, "CounterMismatchDetected");
        corpus.insert(corpus.end(), {rb, cl});
    }

    // Twilight: ephemeral IDs, stateless.
    {
        ConsensusMode mode = FinalMode{1000};
        json params = {{"amount", 42}};
        auto rb = base("twilight", Variant::Vulnerable, AttackKind::Rollback, next_seed(), mode);
        rb.params = params;
        expect(rb, false);
        auto cl = base("twilight", Variant::Vulnerable, AttackKind::Cloning, next_seed(), mode);
        cl.params = params;
        expect(cl, false, "DecryptionFailed");
        corpus.insert(corpus.end(), {rb, cl});
    }

    // FastKitten: fixed client set, randomized lottery.
    {
        ConsensusMode mode = FinalMode{600000};
        json params = {{"clients", 4}, {"clones", 2}, {"rounds", 2000}, {"favored_client", 0}};
        auto rb_v = base("fastkitten_lottery", Variant::Vulnerable, AttackKind::Rollback,
                         next_seed(), mode);
        rb_v.params = params;
        expect(rb_v, false, "StateMismatchDetected");
        auto cl_v = base("fastkitten_lottery", Variant::Vulnerable, AttackKind::Cloning,
                         next_seed(), mode);
        cl_v.params = params;
        cl_v.trials = 10000;
        expect(cl_v, true, "ProposerAdvantage");
        auto rb_p = base("fastkitten_lottery", Variant::Patched, AttackKind::Rollback, next_seed(),
                         mode);
        rb_p.params = params;
        expect(rb_p, false, "StateMismatchDetected");
        auto cl_p = base("fastkitten_lottery", Variant::Patched, AttackKind::Cloning, next_seed(),
                         mode);
        cl_p.params = params;
        cl_p.trials = 10000;
        expect(cl_p, false, "UnregisteredIdRejected");
        corpus.insert(corpus.end(), {rb_v, cl_v, rb_p, cl_p});
    }

    // CCF: view timestamps checked by clients.
    {
        ConsensusMode mode = FinalMode{1000};
        auto rb = base("ccf_kvs", Variant::Vulnerable, AttackKind::Rollback, next_seed(), mode);
        expect(rb, false, "ViewMismatchDetected");
        auto cl = base("ccf_kvs", Variant::Vulnerable, AttackKind::Cloning, next_seed(), mode);
        expect(cl, false, "ViewMismatchDetected");
        corpus.insert(corpus.end(), {rb, cl});
    }

    // Phala: isolated clone answers contract queries with stale state.
    {
        ConsensusMode mode = FinalMode{2250};
        json params = {{"workers", 4},
                       {"expected_heartbeats_per_block", 20},
                       {"isolation_blocks", 3},
                       {"freshness_window", 1}};
        auto rb_v = base("phala_worker", Variant::Vulnerable, AttackKind::Rollback, next_seed(),
                         mode);
        rb_v.params = params;
        expect(rb_v, false);
        auto cl_v = base("phala_worker", Variant::Vulnerable, AttackKind::Cloning, next_seed(),
                         mode);
        cl_v.params = params;
        cl_v.trials = 1000;
        expect(cl_v, true, "StaleResponseAccepted");
        auto rb_p = base("phala_worker", Variant::Patched, AttackKind::Rollback, next_seed(), mode);
        rb_p.params = params;
        expect(rb_p, false);
        auto cl_p = base("phala_worker", Variant::Patched, AttackKind::Cloning, next_seed(), mode);
        cl_p.params = params;
        cl_p.trials = 1000;
        expect(cl_p, false, "StaleResponseRejected");
        corpus.insert(corpus.end(), {rb_v, cl_v, rb_p, cl_p});
    }

    // Secret Network: cleartext contract address, host-fed tx ordering.
    {
        ConsensusMode mode = FinalMode{6000};
        json params = {{"freshness_window", 1}, {"lag_blocks", 3}};
        auto rb_v = base("secret_query", Variant::Vulnerable, AttackKind::Rollback, next_seed(),
                         mode);
        rb_v.params = params;
        expect(rb_v, true, "StaleResponseAccepted");
        auto cl_v = base("secret_query", Variant::Vulnerable, AttackKind::Cloning, next_seed(),
                         mode);
        cl_v.params = params;
        cl_v.trials = 1000;
        expect(cl_v, true, "StaleResponseAccepted");
        auto rb_p = base("secret_query", Variant::Patched, AttackKind::Rollback, next_seed(), mode);
        rb_p.params = params;
        expect(rb_p, false, "StaleResponseRejected");
        auto cl_p = base("secret_query", Variant::Patched, AttackKind::Cloning, next_seed(), mode);
        cl_p.params = params;
        cl_p.trials = 1000;
        expect(cl_p, false, "AddressMismatchRejected");
        corpus.insert(corpus.end(), {rb_v, cl_v, rb_p, cl_p});
    }

    // Ten: POBI leader election, clones share one enrollment.
    {
        ConsensusMode mode = FinalMode{12000};
        json params = {{"honest_enclaves", 8}, {"clones", 2}, {"rounds", 2000}};
        auto rb_v = base("ten_pobi", Variant::Vulnerable, AttackKind::Rollback, next_seed(), mode);
        rb_v.params = params;
        expect(rb_v, false, "StaleAnchorRejected");
        auto cl_v = base("ten_pobi", Variant::Vulnerable, AttackKind::Cloning, next_seed(), mode);
        cl_v.params = params;
        cl_v.trials = 10000;
        expect(cl_v, true, "ProposerAdvantage");
        auto rb_p = base("ten_pobi", Variant::Patched, AttackKind::Rollback, next_seed(), mode);
        rb_p.params = params;
        expect(rb_p, false, "StaleAnchorRejected");
        auto cl_p = base("ten_pobi", Variant::Patched, AttackKind::Cloning, next_seed(), mode);
        cl_p.params = params;
        cl_p.trials = 10000;
        expect(cl_p, false, "UnregisteredIdRejected");
        corpus.insert(corpus.end(), {rb_v, cl_v, rb_p, cl_p});
    }

    // BITE: fork divergence on an eventually-consistent chain.
    {
        ConsensusMode mode = EventualMode{600000, 1.0, 6};
        json params = {{"account", 7}, {"amount", 50}, {"freshness_window", 1}};
        auto rb_v = base("bite_fork", Variant::Vulnerable, AttackKind::Rollback, next_seed(), mode);
        rb_v.params = params;
        expect(rb_v, false);
        auto cl_v = base("bite_fork", Variant::Vulnerable, AttackKind::Cloning, next_seed(), mode);
        cl_v.params = params;
        cl_v.trials = 1000;
        expect(cl_v, true, "DivergentResponses");
        auto rb_p = base("bite_fork", Variant::Patched, AttackKind::Rollback, next_seed(), mode);
        rb_p.params = params;
        expect(rb_p, false);
        auto cl_p = base("bite_fork", Variant::Patched, AttackKind::Cloning, next_seed(), mode);
        cl_p.params = params;
        cl_p.trials = 1000;
        expect(cl_p, false, "ForkMismatchRejected");
        corpus.insert(corpus.end(), {rb_v, cl_v, rb_p, cl_p});
    }

    return corpus;
}

std::vector<ScenarioConfig> demo_corpus() {
    std::vector<ScenarioConfig> demos;
    {
        auto cfg = base("raw_sm", Variant::Vulnerable, AttackKind::Rollback, 4242,
                        FinalMode{1000});
        cfg.name = "raw_sm_rollback";
        cfg.params = {{"program", "counter"}};
        cfg.script = json::array({
            json{{"action", "launch"}},
            json{{"action", "seal"}, {"instance", 0}},
            json{{"action", "step"}, {"instance", 0}, {"input", {{"op", "add"}, {"value", 5}}}},
            json{{"action", "seal"}, {"instance", 0}},
            json{{"action", "restart"}, {"instance", 0}, {"blob", 0}},
            json{{"action", "step"}, {"instance", 0}, {"input", {{"op", "add"}, {"value", 7}}}},
        });
        expect(cfg, true, "RolledBackStateRestored");
        demos.push_back(cfg);
    }
    {
        auto cfg = base("raw_sm", Variant::Vulnerable, AttackKind::Cloning, 4243, FinalMode{1000});
        cfg.name = "raw_sm_cloning";
        cfg.params = {{"program", "counter"}};
        cfg.script = json::array({
            json{{"action", "launch"}},
            json{{"action", "clone"}, {"instance", 0}},
            json{{"action", "step"}, {"instance", 0}, {"input", {{"op", "add"}, {"value", 5}}}},
            json{{"action", "step"}, {"instance", 1}, {"input", {{"op", "add"}, {"value", 7}}}},
        });
        expect(cfg, true, "ForkedStates");
        demos.push_back(cfg);
    }
    {
        // A stateless enclave under the same rollback script: nothing to
        // roll back, the attack cannot fork anything.
        auto cfg = base("raw_sm", Variant::Vulnerable, AttackKind::Rollback, 4244, FinalMode{1000});
        cfg.name = "raw_sm_rollback_stateless";
        cfg.params = {{"program", "mixer"}};
        json mix = {{"op", "mix"}, {"items", {"t1", "t2", "t3"}}};
        cfg.script = json::array({
            json{{"action", "launch"}},
            json{{"action", "seal"}, {"instance", 0}},
            json{{"action", "step"}, {"instance", 0}, {"input", mix}},
            json{{"action", "seal"}, {"instance", 0}},
            json{{"action", "restart"}, {"instance", 0}, {"blob", 0}},
            json{{"action", "step"}, {"instance", 0}, {"input", mix}},
        });
        expect(cfg, false);
        demos.push_back(cfg);
    }
    return demos;
}

std::vector<ScenarioConfig> load_corpus_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::exists(dir))
        throw ForklabError(ErrorCode::IoError, "corpus directory not found: " + dir);
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    std::vector<ScenarioConfig> corpus;
    for (const auto& p : paths) corpus.push_back(load_scenario_file(p));
    return corpus;
}

void dump_corpus(const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "matrix");
    fs::create_directories(fs::path(dir) / "demos");
    for (const ScenarioConfig& cfg : builtin_corpus()) {
        std::string path = (fs::path(dir) / "matrix" / (cfg.name + ".json")).string();
        write_file(path, scenario_to_json(cfg).dump(2) + "\n");
    }
    for (const ScenarioConfig& cfg : demo_corpus()) {
        std::string path = (fs::path(dir) / "demos" / (cfg.name + ".json")).string();
        write_file(path, scenario_to_json(cfg).dump(2) + "\n");
    }
}

}  // namespace forklab::scenarios
