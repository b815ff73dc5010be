#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "forklab/scenarios/corpus.hpp"
#include "forklab/scenarios/report.hpp"
#include "forklab/scenarios/runner.hpp"

using namespace forklab;
using namespace forklab::scenarios;

namespace {

std::optional<uint64_t> env_seed() {
    const char* v = std::getenv("FORKLAB_SEED");
    if (!v || !*v) return std::nullopt;
    return std::strtoull(v, nullptr, 10);
}

void emit(const std::string& content, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << content;
    } else {
        write_file(out_path, content);
    }
}

int cmd_run(const std::string& file, std::optional<uint64_t> seed_flag,
            std::optional<uint64_t> trials_flag, const std::string& out_path,
            const std::string& format_name, bool check_expect) {
    ScenarioConfig cfg = load_scenario_file(file);
    // Seed precedence: --seed, then FORKLAB_SEED, then the scenario file.
    if (auto env = env_seed()) cfg.seed = *env;
    if (seed_flag) cfg.seed = *seed_flag;
    ReportFormat format = format_from_string(format_name);

    if (trials_flag) {
        TrialStats stats = run_trials(cfg, *trials_flag);
        emit(render_trials(cfg, stats, format), out_path);
        return 0;
    }

    ScenarioResult result = run_scenario(cfg);
    emit(render_scenario(cfg, result, format), out_path);
    if (check_expect) {
        if (!cfg.expect_succeeded && !cfg.expect_evidence) {
            std::cerr << "forklab: --expect given but the scenario file has no expect block\n";
            return 2;
        }
        bool ok = true;
        if (cfg.expect_succeeded && result.outcome.succeeded() != *cfg.expect_succeeded) ok = false;
        if (cfg.expect_evidence) {
            bool found = false;
            for (const Evidence& e : result.outcome.evidence) {
                if (std::string(to_string(e.kind)) == *cfg.expect_evidence) found = true;
            }
            if (!found) ok = false;
        }
        if (!ok) {
            std::cerr << "forklab: outcome does not match expectations for " << cfg.name << "\n";
            return 1;
        }
    }
    return 0;
}

int cmd_matrix(const std::string& corpus_dir, const std::string& out_path,
               const std::string& format_name, std::optional<uint64_t> seed_flag,
               bool check_expect) {
    std::vector<ScenarioConfig> corpus =
        corpus_dir.empty() ? builtin_corpus() : load_corpus_dir(corpus_dir);
    std::optional<uint64_t> seed = seed_flag;
    if (!seed) seed = env_seed();
    if (seed) {
        for (auto& cfg : corpus) cfg.seed = *seed;
    }
    MatrixReport report = run_matrix(corpus);
    emit(render_matrix(report, format_from_string(format_name)), out_path);
    if (check_expect && !matrix_cells_equal(report, expected_matrix())) {
        std::cerr << "forklab: matrix does not match the expected qualitative result\n";
        return 1;
    }
    return 0;
}

int cmd_list() {
    std::cout << "protocols:\n";
    for (const auto& id : protocol_ids()) std::cout << "  " << id << "\n";
    std::cout << "variants:\n  vulnerable\n  patched\n";
    std::cout << "attacks:\n  rollback\n  cloning\n  none\n";
    std::cout << "matrix rows:\n";
    for (const auto& [protocol, variant] : matrix_rows())
        std::cout << "  " << protocol << " (" << to_string(variant) << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"forklab: TEE forking-attack simulator"};
    app.require_subcommand(1);

    std::string run_file;
    std::optional<uint64_t> seed_flag;
    std::optional<uint64_t> trials_flag;
    std::string out_path;
    std::string format_name = "json";
    bool check_expect = false;

    auto* run = app.add_subcommand("run", "Run one scenario file");
    run->add_option("scenario-file", run_file, "Scenario JSON file")->required();
    run->add_option("--seed", seed_flag, "Override the scenario seed");
    run->add_option("--trials", trials_flag, "Run N sub-seeded trials and report the frequency");
    run->add_option("--out", out_path, "Write the report to this path");
    run->add_option("--format", format_name, "Report format: json|md|csv");
    run->add_flag("--expect", check_expect, "Exit 1 unless the outcome matches the file's expect block");

    std::string corpus_dir;
    auto* matrix = app.add_subcommand("matrix", "Run the scenario corpus and print the attack matrix");
    matrix->add_option("--corpus", corpus_dir, "Directory of scenario files (default: built-in corpus)");
    matrix->add_option("--out", out_path, "Write the report to this path");
    matrix->add_option("--format", format_name, "Report format: json|md|csv");
    matrix->add_option("--seed", seed_flag, "Override every scenario seed");
    matrix->add_flag("--expect", check_expect, "Exit 1 unless the matrix matches the expected result");

    auto* list = app.add_subcommand("list", "List protocols, variants and attacks");

    std::string dump_dir = "scenarios";
    auto* corpus = app.add_subcommand("corpus", "Write the built-in corpus as scenario files");
    corpus->add_option("--out", dump_dir, "Target directory (default: scenarios)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (run->parsed())
            return cmd_run(run_file, seed_flag, trials_flag, out_path, format_name, check_expect);
        if (matrix->parsed())
            return cmd_matrix(corpus_dir, out_path, format_name, seed_flag, check_expect);
        if (list->parsed()) return cmd_list();
        if (corpus->parsed()) {
            dump_corpus(dump_dir);
            std::cout << "wrote corpus to " << dump_dir << "\n";
            return 0;
        }
    } catch (const ForklabError& e) {
        std::cerr << "forklab: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "forklab: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
