#include "doctest.h"

#include <filesystem>

#include "forklab/scenarios/corpus.hpp"
#include "forklab/scenarios/report.hpp"
#include "forklab/scenarios/runner.hpp"

using namespace forklab;
using namespace forklab::scenarios;

TEST_CASE("scenario parsing rejects unknown fields with a path") {
    json good = {{"name", "x"},      {"protocol", "raw_sm"}, {"variant", "vulnerable"},
                 {"attack", "none"}, {"seed", 1},            {"params", {{"program", "counter"}}}};
    CHECK_NOTHROW(parse_scenario(good));

    json bad = good;
    bad["typo_field"] = 1;
    CHECK_THROWS_WITH_AS(parse_scenario(bad), doctest::Contains("typo_field"), ForklabError);

    json bad_expect = good;
    bad_expect["expect"] = {{"succeded", true}};  // misspelled
    CHECK_THROWS_AS(parse_scenario(bad_expect), ForklabError);

    json bad_consensus = good;
    bad_consensus["consensus"] = {{"mode", "final"}, {"fork_probability", 0.5}};
    CHECK_THROWS_AS(parse_scenario(bad_consensus), ForklabError);
}

TEST_CASE("unknown protocol params are rejected") {
    ScenarioConfig cfg;
    cfg.name = "t";
    cfg.protocol = "pouw";
    cfg.attack = AttackKind::Rollback;
    cfg.params = {{"diff", 0.5}, {"not_a_knob", 1}};
    CHECK_THROWS_WITH_AS(run_scenario(cfg), doctest::Contains("not_a_knob"), ForklabError);
}

TEST_CASE("scenario json round-trips through parse") {
    for (const ScenarioConfig& cfg : builtin_corpus()) {
        json j = scenario_to_json(cfg);
        ScenarioConfig back = parse_scenario(j);
        CHECK(back.name == cfg.name);
        CHECK(back.protocol == cfg.protocol);
        CHECK(back.variant == cfg.variant);
        CHECK(back.attack == cfg.attack);
        CHECK(back.seed == cfg.seed);
        CHECK(back.params == cfg.params);
        CHECK(scenario_to_json(back) == j);
    }
}

TEST_CASE("run_scenario is deterministic: identical logs and outcomes") {
    for (const char* name : {"phala_worker_cloning_vulnerable", "secret_query_rollback_vulnerable",
                             "ten_pobi_rollback_vulnerable", "twilight_cloning_vulnerable"}) {
        const auto corpus = builtin_corpus();
        auto it = std::find_if(corpus.begin(), corpus.end(),
                               [&](const ScenarioConfig& c) { return c.name == name; });
        REQUIRE(it != corpus.end());
        ScenarioResult a = run_scenario(*it);
        ScenarioResult b = run_scenario(*it);
        CHECK(a.log == b.log);
        CHECK(a.outcome.verdict == b.outcome.verdict);
        REQUIRE(a.outcome.evidence.size() == b.outcome.evidence.size());
        for (size_t i = 0; i < a.outcome.evidence.size(); ++i) {
            CHECK(a.outcome.evidence[i].kind == b.outcome.evidence[i].kind);
            CHECK(a.outcome.evidence[i].values == b.outcome.evidence[i].values);
        }
    }
}

TEST_CASE("every corpus scenario matches its expect block") {
    for (const auto& corpus : {builtin_corpus(), demo_corpus()}) {
        for (const ScenarioConfig& cfg : corpus) {
            ScenarioResult r = run_scenario(cfg);
            INFO(cfg.name);
            REQUIRE(cfg.expect_succeeded.has_value());
            CHECK(r.outcome.succeeded() == *cfg.expect_succeeded);
            if (cfg.expect_evidence) {
                bool found = false;
                for (const Evidence& e : r.outcome.evidence) {
                    if (std::string(to_string(e.kind)) == *cfg.expect_evidence) found = true;
                }
                CHECK(found);
            }
        }
    }
}

TEST_CASE("matrix on the builtin corpus reproduces the expected matrix") {
    MatrixReport report = run_matrix(builtin_corpus());
    MatrixReport golden = expected_matrix();
    CHECK(matrix_cells_equal(report, golden));
}

TEST_CASE("matrix requires a complete corpus") {
    auto corpus = builtin_corpus();
    corpus.erase(std::remove_if(corpus.begin(), corpus.end(),
                                [](const ScenarioConfig& c) {
                                    return c.protocol == "ten_pobi" &&
                                           c.attack == AttackKind::Cloning;
                                }),
                 corpus.end());
    CHECK_THROWS_AS(run_matrix(corpus), ForklabError);
}

TEST_CASE("run_trials: sub-seeded trials with a Wilson interval") {
    CHECK_THROWS_AS(run_trials(builtin_corpus().front(), 50), ForklabError);  // N >= 100

    const auto corpus = builtin_corpus();
    auto it = std::find_if(corpus.begin(), corpus.end(), [](const ScenarioConfig& c) {
        return c.name == "ten_pobi_cloning_vulnerable";
    });
    REQUIRE(it != corpus.end());
    TrialStats stats = run_trials(*it, 400);
    CHECK(stats.n == 400);
    CHECK(stats.frequency == doctest::Approx(0.2).epsilon(0.35));
    CHECK(stats.wilson_low < stats.frequency);
    CHECK(stats.wilson_high > stats.frequency);

    TrialStats again = run_trials(*it, 400);
    CHECK(again.successes == stats.successes);
}

TEST_CASE("wilson interval sanity") {
    auto ci = wilson95(50, 100);
    CHECK(ci.low == doctest::Approx(0.4038).epsilon(0.01));
    CHECK(ci.high == doctest::Approx(0.5962).epsilon(0.01));
    auto zero = wilson95(0, 100);
    CHECK(zero.low == 0.0);
    CHECK(zero.high < 0.05);
    auto one = wilson95(100, 100);
    CHECK(one.high == 1.0);
    CHECK(one.low > 0.95);
}

TEST_CASE("report rendering is deterministic and format-complete") {
    MatrixReport report = run_matrix(builtin_corpus());
    for (ReportFormat f : {ReportFormat::Json, ReportFormat::Markdown, ReportFormat::Csv}) {
        std::string once = render_matrix(report, f);
        std::string twice = render_matrix(report, f);
        CHECK(once == twice);
        CHECK_FALSE(once.empty());
    }
    CHECK_THROWS_AS(format_from_string("yaml"), ForklabError);
}

TEST_CASE("shipped scenario files equal the builtin corpus") {
    namespace fs = std::filesystem;
    fs::path root(FORKLAB_SOURCE_DIR);
    auto from_matrix = load_corpus_dir((root / "scenarios" / "matrix").string());
    auto builtin = builtin_corpus();
    REQUIRE(from_matrix.size() == builtin.size());
    // Files load in name order; compare as serialized json against the
    // builtin definition with the same name.
    for (const ScenarioConfig& file_cfg : from_matrix) {
        auto it = std::find_if(builtin.begin(), builtin.end(), [&](const ScenarioConfig& c) {
            return c.name == file_cfg.name;
        });
        REQUIRE(it != builtin.end());
        CHECK(scenario_to_json(file_cfg) == scenario_to_json(*it));
    }
    auto demos = load_corpus_dir((root / "scenarios" / "demos").string());
    CHECK(demos.size() == demo_corpus().size());
}

TEST_CASE("qualitative matrix is seed-invariant (smoke, 3 seeds)") {
    for (uint64_t seed : {11ULL, 222ULL, 3333ULL}) {
        auto corpus = builtin_corpus();
        for (auto& cfg : corpus) cfg.seed = seed;
        MatrixReport report = run_matrix(corpus);
        CHECK(matrix_cells_equal(report, expected_matrix()));
    }
}

TEST_CASE("phala cloning at seed 1: stale False accepted in place of True") {
    const auto corpus = builtin_corpus();
    auto it = std::find_if(corpus.begin(), corpus.end(), [](const ScenarioConfig& c) {
        return c.name == "phala_worker_cloning_vulnerable";
    });
    REQUIRE(it != corpus.end());
    ScenarioConfig cfg = *it;
    cfg.seed = 1;
    ScenarioResult r = run_scenario(cfg);
    CHECK(r.outcome.succeeded());
    bool found = false;
    for (const Evidence& e : r.outcome.evidence) {
        if (e.kind != EvidenceKind::StaleResponseAccepted) continue;
        for (const auto& [k, v] : e.values) {
            if (k == "expected") CHECK(v == "true");
            if (k == "got") CHECK(v == "false");
        }
        found = true;
    }
    CHECK(found);
}

TEST_CASE("log completeness: every evidence value appears in the event log") {
    for (const auto& corpus : {builtin_corpus(), demo_corpus()}) {
        for (const ScenarioConfig& cfg : corpus) {
            ScenarioResult r = run_scenario(cfg);
            INFO(cfg.name);
            for (const Evidence& e : r.outcome.evidence) {
                bool line_found = false;
                for (const std::string& line : r.log) {
                    if (line.find("ev=evidence") == std::string::npos) continue;
                    if (line.find(std::string(to_string(e.kind))) == std::string::npos) continue;
                    bool all_values = true;
                    for (const auto& [k, v] : e.values) {
                        if (line.find(k + "=" + v) == std::string::npos) all_values = false;
                    }
                    if (all_values) {
                        line_found = true;
                        break;
                    }
                }
                CHECK(line_found);
            }
        }
    }
}
