#include "forklab/scenarios/runner.hpp"

#include <algorithm>
#include <cmath>

#include "forklab/codec.hpp"
#include "forklab/protocols/bite.hpp"
#include "forklab/protocols/ccf.hpp"
#include "forklab/protocols/common.hpp"
#include "forklab/protocols/fastkitten.hpp"
#include "forklab/protocols/phala.hpp"
#include "forklab/protocols/pouw.hpp"
#include "forklab/protocols/proof_of_luck.hpp"
#include "forklab/protocols/raw_sm.hpp"
#include "forklab/protocols/secret.hpp"
#include "forklab/protocols/ten.hpp"
#include "forklab/protocols/twilight.hpp"

namespace forklab::scenarios {

using namespace forklab::protocols;

namespace {

AttackOutcome finalize(Simulation& sim, AttackOutcome outcome) {
    outcome.evidence = sim.evidence();
    sim.log().record("verdict", {{"attack", std::string(to_string(outcome.kind))},
                                 {"result", std::string(to_string(outcome.verdict))}});
    return outcome;
}

// Statistical cell rule: the attack counts as working when the measured
// frequency clears the midpoint between the analytic baseline and the
// analytic attack success rate. At the corpus round counts this sits several
// standard deviations from both, so the qualitative cell is seed-stable.
void finish_contest(Simulation& sim, AttackOutcome& outcome, double measured, double baseline,
                    double analytic) {
    double threshold = (baseline + analytic) / 2.0;
    sim.add_evidence(Evidence{EvidenceKind::ProposerAdvantage,
                              {{"p_measured", ev_f64(measured)},
                               {"p_baseline", ev_f64(baseline)},
                               {"p_analytic", ev_f64(analytic)},
                               {"threshold", ev_f64(threshold)}}});
    outcome.verdict = measured > threshold ? AttackOutcome::Verdict::Succeeded
                                           : AttackOutcome::Verdict::Failed;
}

// --- PoUW ---------------------------------------------------------------------

struct PouwParams {
    double diff;
    uint64_t n_instr;
    uint64_t clones;
    uint64_t rounds;
};

PouwParams pouw_params(const ScenarioConfig& cfg) {
    ParamReader p(cfg.params, cfg.name + ".params");
    PouwParams out;
    out.diff = p.f64("diff", 0.2);
    out.n_instr = p.u64("instruction_count", 1);
    out.clones = p.u64("clones", 4);
    out.rounds = p.u64("rounds", 2000);
    p.finish();
    return out;
}

AttackOutcome run_pouw(Simulation& sim, const ScenarioConfig& cfg) {
    PouwParams params = pouw_params(cfg);
    pouw::PoUwConfig pc;
    pc.diff = params.diff;
    pouw::Task task{params.n_instr, to_bytes("client-task")};

    PlatformId platform = sim.tee().add_platform();
    Measurement m = sim.tee().register_program(
        mitigations::stateless_wrap(pouw::pouw_program(pc, cfg.variant)));

    auto* registry_ptr = new mitigations::EphemeralIdRegistry();
    sim.ledger().register_tx_validator(mitigations::kEphemeralRegisterTxKind,
                                       std::unique_ptr<TxValidator>(registry_ptr));

    Handle miner = sim.tee().launch(platform, m);
    std::optional<uint64_t> required_pk;
    if (cfg.variant == Variant::Patched) {
        mitigations::ephemeral_register(sim, miner, "pouw-miner").expect("register miner id");
        required_pk = registry_ptr->active_key("pouw-miner");
    }

    AttackOutcome outcome;
    outcome.kind = cfg.attack;

    if (cfg.attack == AttackKind::Rollback) {
        sim.advance_time(2 * block_interval_of(sim.ledger().mode()));
        ChainView now = sim.ledger().canonical_view();
        Digest stale = now.block_at(now.head_height() - 1).hash;
        // Host feeds the stale block; keep drawing until the enclave has a
        // proof to bind to it.
        std::optional<pouw::PoUwProof> proof;
        for (int i = 0; i < 100000 && !proof; ++i) proof = pouw::pouw_attempt(sim, miner, task, stale);
        if (!proof) {
            outcome.verdict = AttackOutcome::Verdict::Failed;
            return finalize(sim, outcome);
        }
        auto verdict = pouw::verify_proof(sim, *proof, pc, task, now.head_hash(), required_pk);
        if (!verdict.ok() && verdict.code() == ErrorCode::StaleAnchor) {
            sim.add_evidence(Evidence{EvidenceKind::StaleAnchorRejected,
                                      {{"bound", short_hex(stale)},
                                       {"head", short_hex(now.head_hash())}}});
            outcome.verdict = AttackOutcome::Verdict::Failed;
        } else {
            outcome.verdict = verdict.ok() ? AttackOutcome::Verdict::Succeeded
                                           : AttackOutcome::Verdict::Failed;
            if (verdict.ok())
                sim.add_evidence(Evidence{EvidenceKind::StaleResponseAccepted,
                                          {{"what", "stale-bound proof accepted"}}});
        }
        return finalize(sim, outcome);
    }

    // Cloning: the miner runs extra instances and uses any proof.
    std::vector<Handle> instances{miner};
    for (uint64_t c = 1; c < params.clones; ++c) instances.push_back(sim.clone(miner));
    sim.advance_time(block_interval_of(sim.ledger().mode()));
    Digest head = sim.ledger().canonical_view().head_hash();

    double p_single = pouw::threshold(pc.diff, task.instruction_count);
    uint64_t wins = 0;
    bool logged_rejection = false;
    for (uint64_t round = 0; round < params.rounds; ++round) {
        bool any = false;
        for (Handle h : instances) {
            auto proof = pouw::pouw_attempt(sim, h, task, head);
            if (!proof) continue;
            auto verdict = pouw::verify_proof(sim, *proof, pc, task, head, required_pk);
            if (verdict.ok()) {
                any = true;
            } else if (!logged_rejection &&
                       verdict.code() == ErrorCode::UnregisteredEphemeralID) {
                sim.add_evidence(Evidence{EvidenceKind::UnregisteredIdRejected,
                                          {{"signer", ev_u64(proof->signer_pk)}}});
                logged_rejection = true;
            }
        }
        if (any) ++wins;
    }
    double measured = static_cast<double>(wins) / params.rounds;
    double analytic = 1.0 - std::pow(1.0 - p_single, static_cast<double>(params.clones));
    finish_contest(sim, outcome, measured, p_single, analytic);
    return finalize(sim, outcome);
}

// --- Proof of Luck ----------------------------------------------------------------

AttackOutcome run_pol(Simulation& sim, const ScenarioConfig& cfg) {
    ParamReader p(cfg.params, cfg.name + ".params");
    uint64_t clones = p.u64("clones", 2);
    p.finish();

    PlatformId platform = sim.tee().add_platform(/*counter_enabled=*/true);
    Measurement m = sim.tee().register_program(pol::pol_program());
    Handle first = sim.tee().launch(platform, m);

    AttackOutcome outcome;
    outcome.kind = cfg.attack;
    sim.advance_time(2 * block_interval_of(sim.ledger().mode()));
    ChainView now = sim.ledger().canonical_view();

    if (cfg.attack == AttackKind::Rollback) {
        Digest stale = now.block_at(now.head_height() - 1).hash;
        auto proof = pol::pol_generate(sim, first, stale);
        if (!proof.ok()) {
            outcome.verdict = AttackOutcome::Verdict::Failed;
            return finalize(sim, outcome);
        }
        uint64_t expected_pk = sim.tee().measurement_key(m).pk;
        auto verdict = pol::verify_pol(sim, proof.value(), now.head_hash(), expected_pk);
        if (!verdict.ok() && verdict.code() == ErrorCode::StaleAnchor) {
            sim.add_evidence(Evidence{EvidenceKind::StaleAnchorRejected,
                                      {{"bound", short_hex(stale)},
                                       {"head", short_hex(now.head_hash())}}});
            outcome.verdict = AttackOutcome::Verdict::Failed;
        } else {
            outcome.verdict = verdict.ok() ? AttackOutcome::Verdict::Succeeded
                                           : AttackOutcome::Verdict::Failed;
        }
        return finalize(sim, outcome);
    }

    // Cloning: all clones run the PoL round concurrently on one platform.
    std::vector<Handle> instances{first};
    for (uint64_t c = 1; c < clones; ++c) instances.push_back(sim.clone(first));
    uint64_t max_sleep = 0;
    for (Handle h : instances) {
        auto started = pol::pol_start(sim, h, now.head_hash());
        started.expect("pol start");
        max_sleep = std::max(max_sleep, started.value().sleep_ms);
    }
    sim.advance_time(max_sleep);
    uint64_t proofs = 0;
    uint64_t mismatches = 0;
    for (Handle h : instances) {
        auto finished = pol::pol_finish(sim, h);
        if (finished.ok()) {
            ++proofs;
        } else if (finished.code() == ErrorCode::CounterMismatch) {
            ++mismatches;
            sim.add_evidence(Evidence{EvidenceKind::CounterMismatchDetected,
                                      {{"handle", ev_u64(h.value)},
                                       {"detail", finished.error().detail}}});
        }
    }
    sim.log().record("pol_round", {{"clones", ev_u64(clones)},
                                   {"proofs", ev_u64(proofs)},
                                   {"mismatches", ev_u64(mismatches)}});
    // The attack needed multiple proofs to choose from.
    outcome.verdict = proofs > 1 ? AttackOutcome::Verdict::Succeeded
                                 : AttackOutcome::Verdict::Failed;
    return finalize(sim, outcome);
}

// --- Twilight ----------------------------------------------------------------------

AttackOutcome run_twilight(Simulation& sim, const ScenarioConfig& cfg) {
    ParamReader p(cfg.params, cfg.name + ".params");
    uint64_t amount = p.u64("amount", 42);
    p.finish();

    AttackOutcome outcome;
    outcome.kind = cfg.attack;
    if (cfg.attack == AttackKind::Rollback) {
        // Stateless by construction: nothing mutable is ever sealed, so
        // there is no blob to roll back to.
        sim.log().record("not_applicable", {{"reason", "stateless enclave, no sealed state"}});
        outcome.verdict = AttackOutcome::Verdict::NotApplicable;
        return finalize(sim, outcome);
    }

    PlatformId honest_platform = sim.tee().add_platform();
    PlatformId malicious_platform = sim.tee().add_platform();
    Measurement m = sim.tee().register_program(
        mitigations::stateless_wrap(twilight::relay_program()));

    auto* registry = new mitigations::EphemeralIdRegistry();
    sim.ledger().register_tx_validator(mitigations::kEphemeralRegisterTxKind,
                                       std::unique_ptr<TxValidator>(registry));

    Handle relay_h = sim.tee().launch(honest_platform, m);
    Handle relay_m = sim.tee().launch(malicious_platform, m);
    twilight::open_channel(sim, relay_h, "twilight:H", relay_m, "twilight:M")
        .expect("channel setup");
    sim.advance_time(block_interval_of(sim.ledger().mode()));

    Handle clone_m = sim.clone(relay_m);
    uint64_t registered_pk = registry->active_key("twilight:M").value();
    Bytes payment = twilight::twilight_pay(sim, relay_h, registered_pk, amount);

    // The malicious relay tries to claim at both instances.
    auto at_original = twilight::twilight_claim(sim, relay_m, payment);
    auto at_clone = twilight::twilight_claim(sim, clone_m, payment);
    sim.log().record("twilight_claims",
                     {{"original", at_original.ok() ? ev_u64(at_original.value()) : "fail"},
                      {"clone", at_clone.ok() ? ev_u64(at_clone.value()) : "fail"}});
    if (!at_clone.ok()) {
        sim.add_evidence(Evidence{EvidenceKind::DecryptionFailed,
                                  {{"instance", ev_u64(clone_m.value)},
                                   {"detail", at_clone.error().detail}}});
    }
    outcome.verdict = at_clone.ok() ? AttackOutcome::Verdict::Succeeded
                                    : AttackOutcome::Verdict::Failed;
    return finalize(sim, outcome);
}

// --- FastKitten ----------------------------------------------------------------------

struct FkParams {
    uint32_t k;
    uint64_t clones;
    uint64_t rounds;
    uint32_t favored;
};

FkParams fk_params(const ScenarioConfig& cfg) {
    ParamReader p(cfg.params, cfg.name + ".params");
    FkParams out;
    out.k = static_cast<uint32_t>(p.u64("clients", 4));
    out.clones = p.u64("clones", 2);
    out.rounds = p.u64("rounds", 2000);
    out.favored = static_cast<uint32_t>(p.u64("favored_client", 0));
    p.finish();
    return out;
}

AttackOutcome run_fastkitten(Simulation& sim, const ScenarioConfig& cfg) {
    FkParams params = fk_params(cfg);
    PlatformId platform = sim.tee().add_platform();
    fastkitten::LotterySetup setup =
        fastkitten::lottery_setup(sim, platform, params.k, cfg.variant);

    AttackOutcome outcome;
    outcome.kind = cfg.attack;

    if (cfg.attack == AttackKind::Rollback) {
        // Blob of the round-j state, then play the round honestly.
        SealedBlob blob = sim.tee().seal(setup.enclave, sim.tee().inspect(setup.enclave).volatile_state);
        auto inputs = fastkitten::sign_round(sim, setup, setup.enclave);
        mitigations::fixed_client_round(sim, setup.enclave, inputs).expect("honest round");
        // Clients track the post-round state; the rolled-back enclave is one
        // round behind when they sign their next inputs.
        Digest live_digest =
            mitigations::fixed_client_state_digest(sim.crypto(), sim.tee(), setup.enclave);
        Handle rolled = sim.restart_with(setup.enclave, blob).expect("rollback restart");
        auto next_inputs = fastkitten::sign_round_at(sim, setup, live_digest);
        auto stale_round = mitigations::fixed_client_round(sim, rolled, next_inputs);
        if (!stale_round.ok() && stale_round.code() == ErrorCode::StateMismatch) {
            sim.add_evidence(Evidence{EvidenceKind::StateMismatchDetected,
                                      {{"detail", stale_round.error().detail}}});
            outcome.verdict = AttackOutcome::Verdict::Failed;
        } else {
            outcome.verdict = stale_round.ok() ? AttackOutcome::Verdict::Succeeded
                                               : AttackOutcome::Verdict::Failed;
        }
        return finalize(sim, outcome);
    }

    // Cloning: provision clones with the sealed round state; every round the
    // host feeds the same signed inputs to every instance and forwards the
    // most favorable winner.
    SealedBlob blob = sim.tee().seal(setup.enclave, sim.tee().inspect(setup.enclave).volatile_state);
    std::vector<Handle> instances{setup.enclave};
    for (uint64_t c = 1; c < params.clones; ++c)
        instances.push_back(sim.clone_with(setup.enclave, blob).expect("clone with state"));

    uint64_t favored_wins = 0;
    bool logged_rejection = false;
    for (uint64_t round = 0; round < params.rounds; ++round) {
        auto inputs = fastkitten::sign_round(sim, setup, instances.front());
        std::vector<mitigations::RoundResult> candidates;
        for (Handle h : instances) {
            auto r = mitigations::fixed_client_round(sim, h, inputs);
            r.expect("cloned round");
            candidates.push_back(r.value());
        }
        // Patched: clients only accept outputs signed by the agreed key.
        std::vector<mitigations::RoundResult> valid;
        for (const auto& c : candidates) {
            if (cfg.variant == Variant::Patched) {
                if (!mitigations::verify_round_output(sim.crypto(), c, setup.agreed_pk)) {
                    if (!logged_rejection) {
                        sim.add_evidence(Evidence{EvidenceKind::UnregisteredIdRejected,
                                                  {{"signer", c.signer_pk ? ev_u64(*c.signer_pk)
                                                                          : "none"}}});
                        logged_rejection = true;
                    }
                    continue;
                }
            }
            valid.push_back(c);
        }
        if (!valid.empty()) {
            std::vector<Output> candidates;
            for (const auto& c : valid) candidates.push_back(c.inner_output);
            size_t chosen =
                sim.select_output(candidates, "favored-client-wins", [&](const Output& o) {
                    return fastkitten::winner_of(o) == params.favored;
                });
            if (fastkitten::winner_of(valid[chosen].inner_output) == params.favored)
                ++favored_wins;
        }
    }
    double measured = static_cast<double>(favored_wins) / params.rounds;
    double baseline = 1.0 / params.k;
    double analytic =
        1.0 - std::pow(1.0 - baseline, static_cast<double>(params.clones));
    finish_contest(sim, outcome, measured, baseline, analytic);
    return finalize(sim, outcome);
}

// --- CCF -------------------------------------------------------------------------

AttackOutcome run_ccf(Simulation& sim, const ScenarioConfig& cfg) {
    ParamReader p(cfg.params, cfg.name + ".params");
    p.finish();

    PlatformId platform = sim.tee().add_platform();
    Measurement m = sim.tee().register_program(ccf::kvs_program());
    Handle primary = sim.tee().launch(platform, m);
    sim.connect(primary, {NodeConnection::honest()});

    const uint64_t interval = block_interval_of(sim.ledger().mode());
    // View 1, then committed transactions.
    ccf::ccf_view_change(sim, primary).expect("view change");
    ccf::ccf_submit(sim, primary, "balance", "100").expect("put");
    sim.advance_time(interval);
    ccf::ccf_submit(sim, primary, "balance", "250").expect("put");
    sim.advance_time(interval);

    uint64_t client_view = ccf::ccf_connect(sim, primary, 0).expect("client connect").view;

    AttackOutcome outcome;
    outcome.kind = cfg.attack;

    ChainView canon = sim.ledger().canonical_view();
    std::vector<Block> full = canon.collect_all();
    // Prefix that stops before the view-change landed.
    std::vector<Block> truncated;
    for (const Block& b : full) {
        bool has_view_change = false;
        for (const Tx& tx : b.txs) {
            if (tx.kind == ccf::kViewChangeTxKind) has_view_change = true;
        }
        if (has_view_change) break;
        truncated.push_back(b);
    }

    Handle stale_instance{};
    if (cfg.attack == AttackKind::Rollback) {
        // Restart the primary and replay only the truncated prefix.
        stale_instance = sim.restart_with(primary, std::nullopt).expect("restart");
        mitigations::replay_recover(sim.tee(), stale_instance, truncated, ccf::replay_mapper())
            .expect("truncated replay");
    } else {
        // Clone provisioned with the stale prefix only.
        stale_instance = sim.clone(primary);
        mitigations::replay_recover(sim.tee(), stale_instance, truncated, ccf::replay_mapper())
            .expect("truncated replay");
    }

    auto connect = ccf::ccf_connect(sim, stale_instance, client_view);
    if (!connect.ok() && connect.code() == ErrorCode::Aborted) {
        sim.add_evidence(Evidence{EvidenceKind::ViewMismatchDetected,
                                  {{"client_view", ev_u64(client_view)},
                                   {"detail", connect.error().detail}}});
        outcome.verdict = AttackOutcome::Verdict::Failed;
    } else {
        outcome.verdict = connect.ok() ? AttackOutcome::Verdict::Succeeded
                                       : AttackOutcome::Verdict::Failed;
        if (connect.ok())
            sim.add_evidence(Evidence{EvidenceKind::StaleResponseAccepted,
                                      {{"view", ev_u64(connect.value().view)}}});
    }

    // Honest recovery path: full replay serves the current view again.
    if (cfg.attack == AttackKind::Rollback) {
        Handle recovered = sim.restart_with(stale_instance, std::nullopt).expect("recover");
        mitigations::replay_recover(sim.tee(), recovered, full, ccf::replay_mapper())
            .expect("full replay");
        auto ok = ccf::ccf_connect(sim, recovered, client_view);
        sim.log().record("ccf_recovery", {{"served_view", ok.ok() ? ev_u64(ok.value().view) : "abort"}});
    }
    return finalize(sim, outcome);
}

// --- Phala ---------------------------------------------------------------------------

struct PhalaScenario {
    PlatformId platform;
    Measurement measurement;
    Digest contract_address{};
    KeyPair contract_key;
    std::vector<Handle> workers;
    SyncTracker sync;
    phala::Gatekeeper gatekeeper;
    uint64_t gatekeeper_seen = 0;
    uint64_t expected_period_blocks = 1;

    explicit PhalaScenario(const CryptoProvider& crypto) : gatekeeper(crypto) {}
};

uint32_t toggles_in(const Block& b, const Digest& address) {
    uint32_t n = 0;
    for (const Tx& tx : b.txs) {
        if (tx.kind != phala::kToggleTxKind) continue;
        ByteReader r(tx.payload);
        if (r.digest() == address) ++n;
    }
    return n;
}

void phala_sync(Simulation& sim, PhalaScenario& s) {
    for (Handle h : s.workers) {
        auto blocks = s.sync.pull(sim, h);
        for (const Block& b : blocks) {
            auto out = phala::feed_block(sim, h, b, toggles_in(b, s.contract_address));
            if (out.heartbeat)
                (void)sim.ledger().submit_tx(phala::kHeartbeatTxKind, *out.heartbeat);
        }
    }
    // Gatekeeper sees every canonical block once.
    ChainView canon = sim.ledger().canonical_view();
    for (uint64_t h = s.gatekeeper_seen + 1; h <= canon.head_height(); ++h)
        s.gatekeeper.observe_block(canon.block_at(h));
    s.gatekeeper_seen = canon.head_height();
}

bool canonical_flip_value(Simulation& sim, const Digest& address) {
    ChainView canon = sim.ledger().canonical_view();
    bool v = false;
    for (const Block& b : canon.collect_all()) {
        for (uint32_t i = 0; i < toggles_in(b, address); ++i) v = !v;
    }
    return v;
}

AttackOutcome run_phala(Simulation& sim, const ScenarioConfig& cfg) {
    ParamReader p(cfg.params, cfg.name + ".params");
    uint64_t n_workers = p.u64("workers", 4);
    uint64_t expected = p.u64("expected_heartbeats_per_block", 20);
    uint64_t lag_blocks = p.u64("isolation_blocks", 3);
    uint64_t window = p.u64("freshness_window", 1);
    p.finish();

    const uint64_t interval = block_interval_of(sim.ledger().mode());
    PhalaScenario s(sim.crypto());
    s.platform = sim.tee().add_platform();
    phala::WorkerParams wp{n_workers, expected};
    s.measurement = sim.tee().register_program(phala::worker_program(wp, cfg.variant));
    s.expected_period_blocks = std::max<uint64_t>(1, n_workers / std::min(expected, n_workers));

    RngStream secret_rng = sim.make_stream("phala-secret");
    SharedNetworkSecret secret = SharedNetworkSecret::generate(secret_rng);
    s.contract_address = sim.crypto().hash(to_bytes("flip-contract@phala"));
    s.contract_key = secret.contract_keypair(sim.crypto(), s.contract_address);

    for (uint64_t i = 0; i < n_workers; ++i) {
        Handle h = sim.tee().launch(s.platform, s.measurement);
        phala::provision_worker(sim, h, s.contract_address, s.contract_key.sk);
        sim.connect(h, {NodeConnection::honest(i)});
        s.workers.push_back(h);
    }

    sim.advance_time(2 * interval);
    phala_sync(sim, s);

    AttackOutcome outcome;
    outcome.kind = cfg.attack;
    Handle victim = s.workers.front();

    RngStream client_rng = sim.make_stream("phala-client");
    phala::QueryContext qc;
    qc.client_identity = sim.crypto().keygen(client_rng);
    qc.contract_address = s.contract_address;
    qc.contract_pk = s.contract_key.pk;

    auto query_and_judge = [&](Handle responder) {
        phala::BuiltQuery q = phala::build_query(sim.crypto(), client_rng, qc, to_bytes("get_data"));
        auto reply = phala::deliver_query(sim, responder, q.query);
        bool expected_value = canonical_flip_value(sim, s.contract_address);
        if (cfg.variant == Variant::Vulnerable) {
            if (!reply.ok()) {
                outcome.verdict = AttackOutcome::Verdict::Failed;
                return;
            }
            auto rep = phala::parse_reply_vulnerable(reply.value());
            bool got = rep.value().result != 0;
            bool nonce_ok = rep.value().nonce == q.nonce;
            sim.log().record("phala_client_accepts", {{"got", ev_bool(got)},
                                                      {"expected", ev_bool(expected_value)},
                                                      {"nonce_ok", ev_bool(nonce_ok)}});
            if (nonce_ok && got != expected_value) {
                sim.add_evidence(Evidence{EvidenceKind::StaleResponseAccepted,
                                          {{"expected", ev_bool(expected_value)},
                                           {"got", ev_bool(got)}}});
                outcome.verdict = AttackOutcome::Verdict::Succeeded;
            } else {
                outcome.verdict = AttackOutcome::Verdict::Failed;
            }
            return;
        }
        // Patched: the client checks the height timestamp.
        if (!reply.ok()) {
            outcome.verdict = AttackOutcome::Verdict::Failed;
            return;
        }
        ChainView client_view = sim.ledger().canonical_view();
        auto rep = phala::parse_reply_patched(sim.crypto(), reply.value(), qc.contract_pk,
                                              client_view, window);
        if (!rep.ok() && rep.code() == ErrorCode::RejectStale) {
            sim.add_evidence(Evidence{EvidenceKind::StaleResponseRejected,
                                      {{"detail", rep.error().detail}}});
            outcome.verdict = AttackOutcome::Verdict::Failed;
            return;
        }
        if (rep.ok()) {
            bool got = rep.value().result != 0;
            if (got != expected_value) {
                sim.add_evidence(Evidence{EvidenceKind::StaleResponseAccepted,
                                          {{"expected", ev_bool(expected_value)},
                                           {"got", ev_bool(got)}}});
                outcome.verdict = AttackOutcome::Verdict::Succeeded;
                return;
            }
        }
        outcome.verdict = AttackOutcome::Verdict::Failed;
    };

    if (cfg.attack == AttackKind::Cloning) {
        // Clone the worker with its checkpoint, cut its relayer off, then
        // toggle the contract on-chain; only connected workers see it.
        SealedBlob checkpoint =
            sim.tee().seal(victim, sim.tee().inspect(victim).volatile_state);
        Handle clone = sim.clone_with(victim, checkpoint).expect("clone with checkpoint");
        sim.isolate(clone);
        (void)sim.ledger().submit_tx(phala::kToggleTxKind, [&] {
            ByteWriter w;
            w.digest(s.contract_address);
            return w.take();
        }());
        sim.advance_time(interval);
        phala_sync(sim, s);
        sim.advance_time(lag_blocks * interval);
        phala_sync(sim, s);

        auto missing = s.gatekeeper.missing_heartbeats(sim.ledger().canonical_height(),
                                                       s.expected_period_blocks);
        sim.log().record("gatekeeper_check", {{"missing", ev_u64(missing.size())}});
        query_and_judge(clone);
        return finalize(sim, outcome);
    }

    // Rollback: stale checkpoint, but the relayer keeps the worker synced to
    // its honest connection, so replay repairs the state.
    SealedBlob checkpoint = sim.tee().seal(victim, sim.tee().inspect(victim).volatile_state);
    uint64_t checkpoint_height = s.sync.last_height(victim);
    (void)sim.ledger().submit_tx(phala::kToggleTxKind, [&] {
        ByteWriter w;
        w.digest(s.contract_address);
        return w.take();
    }());
    sim.advance_time(interval);
    phala_sync(sim, s);
    sim.advance_time(lag_blocks * interval);
    phala_sync(sim, s);

    Handle restarted = sim.restart_with(victim, checkpoint).expect("rollback restart");
    s.workers.front() = restarted;
    // An honest relayer resumes delivery from the checkpoint's height.
    Digest checkpoint_tip = sim.ledger().canonical_view().block_at(checkpoint_height).hash;
    s.sync.reset(restarted, checkpoint_height, checkpoint_tip);
    phala_sync(sim, s);
    sim.log().record("phala_replayed",
                     {{"from_height", ev_u64(checkpoint_height)},
                      {"to_height", ev_u64(s.sync.last_height(restarted))}});
    query_and_judge(restarted);
    return finalize(sim, outcome);
}

// --- Secret Network ---------------------------------------------------------------

AttackOutcome run_secret(Simulation& sim, const ScenarioConfig& cfg) {
    ParamReader p(cfg.params, cfg.name + ".params");
    uint64_t window = p.u64("freshness_window", 1);
    uint64_t lag_blocks = p.u64("lag_blocks", 3);
    p.finish();

    const uint64_t interval = block_interval_of(sim.ledger().mode());
    PlatformId platform = sim.tee().add_platform();
    Measurement m = sim.tee().register_program(secret::node_program(cfg.variant));
    Handle node = sim.tee().launch(platform, m);
    sim.connect(node, {NodeConnection::honest()});

    RngStream secret_rng = sim.make_stream("sn-secret");
    SharedNetworkSecret net = SharedNetworkSecret::generate(secret_rng);
    KeyPair io = net.io_keypair(sim.crypto());
    secret::provision_node(sim, node, io.sk);

    Digest code_hash = sim.crypto().hash(to_bytes("sn-counter-code"));
    Digest addr_a = sim.crypto().hash(to_bytes("sn-contract-a"));
    Digest addr_a2 = sim.crypto().hash(to_bytes("sn-contract-a-prime"));

    SyncTracker sync;
    auto sync_node = [&](Handle h) {
        for (const Block& b : sync.pull(sim, h)) {
            secret::feed_block(sim, h, b).expect("node accepts chain block");
        }
    };

    (void)sim.ledger().submit_tx(secret::kInstantiateTxKind,
                                 secret::encode_instantiate(addr_a, code_hash, 1));
    (void)sim.ledger().submit_tx(secret::kInstantiateTxKind,
                                 secret::encode_instantiate(addr_a2, code_hash, 1));
    sim.advance_time(interval);
    sync_node(node);

    AttackOutcome outcome;
    outcome.kind = cfg.attack;
    RngStream client_rng = sim.make_stream("sn-client");

    auto open_reply = [&](const secret::BuiltQuery& q, const Result<Output>& reply,
                          Handle /*responder*/) -> Result<secret::QueryAnswer> {
        if (!reply.ok()) return reply.error();
        Digest k = secret::derive_query_key(sim.crypto(), q.nonce, q.ephemeral.sk, io.pk);
        if (cfg.variant == Variant::Vulnerable)
            return secret::open_reply_vulnerable(sim.crypto(), reply.value(), k, q.nonce);
        return secret::open_reply_patched(sim.crypto(), reply.value(), k, q.nonce, io.pk,
                                          sim.ledger().canonical_view(), window);
    };

    if (cfg.attack == AttackKind::Cloning) {
        (void)sim.ledger().submit_tx(secret::kIncrementTxKind, secret::encode_increment(addr_a));
        sim.advance_time(interval);
        sync_node(node);

        // Honest query reaches the intended contract.
        secret::BuiltQuery q1 = secret::build_query(sim.crypto(), client_rng, io.pk, addr_a,
                                                    code_hash, to_bytes("get_count"), cfg.variant);
        auto a1 = open_reply(q1, secret::deliver_query(sim, node, q1.query), node);
        sim.log().record("secret_honest_query",
                         {{"count", a1.ok() ? ev_i64(a1.value().count) : "fail"}});

        // The proxy rewrites the cleartext address a -> a'.
        secret::BuiltQuery q2 = secret::build_query(sim.crypto(), client_rng, io.pk, addr_a,
                                                    code_hash, to_bytes("get_count"), cfg.variant);
        Bytes rewritten = sim.modify(q2.query, [&](Bytes& b) {
            Bytes nb = secret::rewrite_address(b, addr_a2);
            b = nb;
        });
        auto reply = secret::deliver_query(sim, node, rewritten);
        if (!reply.ok() && reply.code() == ErrorCode::AddressMismatch) {
            sim.add_evidence(Evidence{EvidenceKind::AddressMismatchRejected,
                                      {{"detail", reply.error().detail}}});
            outcome.verdict = AttackOutcome::Verdict::Failed;
            return finalize(sim, outcome);
        }
        auto a2 = open_reply(q2, reply, node);
        if (a2.ok() && a1.ok() && a2.value().count != a1.value().count) {
            sim.add_evidence(Evidence{EvidenceKind::StaleResponseAccepted,
                                      {{"expected", ev_i64(a1.value().count)},
                                       {"got", ev_i64(a2.value().count)}}});
            outcome.verdict = AttackOutcome::Verdict::Succeeded;
        } else {
            outcome.verdict = AttackOutcome::Verdict::Failed;
        }
        return finalize(sim, outcome);
    }

    // Rollback: seal the pre-increment state, let the increment commit, then
    // restart from the stale blob and withhold the newer blocks.
    SealedBlob blob = sim.tee().seal(node, sim.tee().inspect(node).volatile_state);
    (void)sim.ledger().submit_tx(secret::kIncrementTxKind, secret::encode_increment(addr_a));
    sim.advance_time(interval);
    sync_node(node);
    sim.advance_time(lag_blocks * interval);
    sync_node(node);

    Handle rolled = sim.restart_with(node, blob).expect("rollback restart");
    secret::BuiltQuery q = secret::build_query(sim.crypto(), client_rng, io.pk, addr_a, code_hash,
                                               to_bytes("get_count"), cfg.variant);
    auto answer = open_reply(q, secret::deliver_query(sim, rolled, q.query), rolled);
    if (!answer.ok() && answer.code() == ErrorCode::RejectStale) {
        sim.add_evidence(Evidence{EvidenceKind::StaleResponseRejected,
                                  {{"detail", answer.error().detail}}});
        outcome.verdict = AttackOutcome::Verdict::Failed;
        return finalize(sim, outcome);
    }
    if (answer.ok() && answer.value().count == 1) {
        sim.add_evidence(Evidence{EvidenceKind::StaleResponseAccepted,
                                  {{"expected", ev_i64(2)}, {"got", ev_i64(answer.value().count)}}});
        sim.add_evidence(Evidence{EvidenceKind::RolledBackStateRestored,
                                  {{"blob_seq", ev_u64(blob.seq_hint)}}});
        outcome.verdict = AttackOutcome::Verdict::Succeeded;
    } else {
        outcome.verdict = AttackOutcome::Verdict::Failed;
    }
    return finalize(sim, outcome);
}

// --- Ten -----------------------------------------------------------------------------

struct TenNet {
    Measurement measurement;
    SharedNetworkSecret secret;
    std::vector<Handle> honest;
    std::vector<Digest> honest_addr;
    std::vector<Handle> adversary;
    Digest adversary_addr{};
    mitigations::EphemeralIdRegistry* registry = nullptr;
    uint64_t signer_pk = 0;
};

TenNet ten_setup(Simulation& sim, const ScenarioConfig& cfg, uint64_t honest_count,
                 uint64_t clone_count) {
    TenNet net;
    net.measurement = sim.tee().register_program(ten::enclave_program(cfg.variant));
    RngStream secret_rng = sim.make_stream("ten-secret");
    net.secret = SharedNetworkSecret::generate(secret_rng);
    net.signer_pk = sim.tee().measurement_key(net.measurement).pk;

    auto* registry = new mitigations::EphemeralIdRegistry();
    sim.ledger().register_tx_validator(mitigations::kEphemeralRegisterTxKind,
                                       std::unique_ptr<TxValidator>(registry));
    net.registry = registry;
    sim.ledger().register_tx_validator(
        ten::kRollupTxKind, std::make_unique<ten::TenRollupValidator>(
                                sim.crypto(), net.signer_pk, cfg.variant, registry));

    for (uint64_t i = 0; i < honest_count; ++i) {
        PlatformId pf = sim.tee().add_platform();
        Handle h = sim.tee().launch(pf, net.measurement);
        ByteWriter aw;
        aw.str("ten-node").u64(i);
        Digest addr = sim.crypto().hash(aw.bytes());
        ten::provision_ten(sim, h, net.secret.master_seed, addr);
        if (cfg.variant == Variant::Patched)
            mitigations::ephemeral_register(sim, h, ten::aggregator_role(addr))
                .expect("register honest aggregator");
        net.honest.push_back(h);
        net.honest_addr.push_back(addr);
    }

    // Adversary: enroll one instance (attestation + one fee), then clone the
    // sealed, already-enrolled state.
    PlatformId adv_pf = sim.tee().add_platform();
    Handle candidate = sim.tee().launch(adv_pf, net.measurement);
    const auto& cand_key = sim.tee().inspect(candidate).ephemeral_keypair.value();
    ByteWriter rd;
    rd.u64(cand_key.pk);
    AttestationReport report = sim.tee().attest(candidate, rd.bytes());
    const auto& member_key = sim.tee().inspect(net.honest.front()).ephemeral_keypair.value();
    auto delivery = enroll(sim, report, net.measurement, member_key, net.secret);
    Bytes seed = open_enrollment(sim.crypto(), cand_key, delivery.expect("enrollment"))
                     .expect("seed recovery");
    net.adversary_addr = sim.crypto().hash(to_bytes("ten-adversary"));
    ten::provision_ten(sim, candidate, seed, net.adversary_addr);
    if (cfg.variant == Variant::Patched)
        mitigations::ephemeral_register(sim, candidate, ten::aggregator_role(net.adversary_addr))
            .expect("register adversary aggregator");
    net.adversary.push_back(candidate);
    SealedBlob blob = sim.tee().seal(candidate, sim.tee().inspect(candidate).volatile_state);
    for (uint64_t c = 1; c < clone_count; ++c)
        net.adversary.push_back(sim.clone_with(candidate, blob).expect("clone enrolled enclave"));
    sim.log().record("ten_setup", {{"honest", ev_u64(honest_count)},
                                   {"adversary_instances", ev_u64(net.adversary.size())},
                                   {"fees_paid", ev_u64(count_enroll_fees(sim.ledger()))}});
    return net;
}

AttackOutcome run_ten(Simulation& sim, const ScenarioConfig& cfg) {
    ParamReader p(cfg.params, cfg.name + ".params");
    uint64_t honest_count = p.u64("honest_enclaves", 8);
    uint64_t clone_count = p.u64("clones", 2);
    uint64_t rounds = p.u64("rounds", 2000);
    p.finish();

    const uint64_t interval = block_interval_of(sim.ledger().mode());
    TenNet net = ten_setup(sim, cfg, honest_count, clone_count);
    AttackOutcome outcome;
    outcome.kind = cfg.attack;

    if (cfg.attack == AttackKind::Rollback) {
        sim.advance_time(2 * interval);
        ChainView now = sim.ledger().canonical_view();
        const Block& stale = now.block_at(now.head_height() - 1);
        auto rollup = ten::ten_propose(sim, net.adversary.front(), stale, 1);
        rollup.expect("proposal");
        auto settled = ten::ten_settle(sim, {rollup.value()}, now.head_hash(), cfg.variant,
                                       net.registry, net.signer_pk);
        if (!settled.ok()) {
            sim.add_evidence(Evidence{EvidenceKind::StaleAnchorRejected,
                                      {{"bound", short_hex(stale.hash)},
                                       {"head", short_hex(now.head_hash())}}});
            outcome.verdict = AttackOutcome::Verdict::Failed;
        } else {
            sim.add_evidence(Evidence{EvidenceKind::StaleResponseAccepted,
                                      {{"what", "stale-anchored rollup accepted"}}});
            outcome.verdict = AttackOutcome::Verdict::Succeeded;
        }
        return finalize(sim, outcome);
    }

    uint64_t adversary_wins = 0;
    bool logged_rejection = false;
    for (uint64_t round = 0; round < rounds; ++round) {
        sim.advance_time(interval);
        ChainView now = sim.ledger().canonical_view();
        const Block& head = now.head();
        std::vector<ten::TenRollup> submissions;
        for (Handle h : net.honest) {
            submissions.push_back(ten::ten_propose(sim, h, head, round).expect("honest proposal"));
        }
        std::vector<ten::TenRollup> adv;
        for (Handle h : net.adversary) {
            adv.push_back(ten::ten_propose(sim, h, head, round).expect("adversary proposal"));
        }
        if (cfg.variant == Variant::Vulnerable) {
            // Forward only the most favorable rollup.
            uint64_t min_nonce = UINT64_MAX;
            for (const auto& r : adv) min_nonce = std::min(min_nonce, r.aggregator_nonce);
            std::vector<Output> candidates;
            for (const auto& r : adv) candidates.push_back(ten::encode_rollup_header(r));
            size_t best = sim.select_output(candidates, "lowest-nonce", [&](const Output& o) {
                return ten::decode_rollup_header(o, false).aggregator_nonce == min_nonce;
            });
            submissions.push_back(adv[best]);
        } else {
            for (auto& r : adv) submissions.push_back(r);
        }
        auto settled = ten::ten_settle(sim, submissions, head.hash, cfg.variant, net.registry,
                                       net.signer_pk);
        if (!settled.ok()) continue;
        if (!logged_rejection && cfg.variant == Variant::Patched) {
            for (const auto& [idx, err] : settled.value().rejected) {
                if (err.code == ErrorCode::UnregisteredEphemeralID) {
                    sim.add_evidence(Evidence{EvidenceKind::UnregisteredIdRejected,
                                              {{"submission", ev_u64(idx)}}});
                    logged_rejection = true;
                    break;
                }
            }
        }
        if (settled.value().accepted.aggregator_l2_address == net.adversary_addr) ++adversary_wins;
    }
    double measured = static_cast<double>(adversary_wins) / rounds;
    double baseline = 1.0 / (honest_count + 1);
    double analytic = static_cast<double>(clone_count) / (honest_count + clone_count);
    finish_contest(sim, outcome, measured, baseline, analytic);
    return finalize(sim, outcome);
}

// --- BITE ----------------------------------------------------------------------------

AttackOutcome run_bite(Simulation& sim, const ScenarioConfig& cfg) {
    ParamReader p(cfg.params, cfg.name + ".params");
    uint64_t account = p.u64("account", 7);
    int64_t amount = static_cast<int64_t>(p.u64("amount", 50));
    uint64_t window = p.u64("freshness_window", 1);
    p.finish();

    AttackOutcome outcome;
    outcome.kind = cfg.attack;
    if (cfg.attack == AttackKind::Rollback) {
        sim.log().record("not_applicable",
                         {{"reason", "only the fork-divergence scenario is modeled"}});
        outcome.verdict = AttackOutcome::Verdict::NotApplicable;
        return finalize(sim, outcome);
    }

    const uint64_t interval = block_interval_of(sim.ledger().mode());
    PlatformId platform = sim.tee().add_platform();
    Measurement m = sim.tee().register_program(bite::scanner_program(cfg.variant));
    Handle scanner_a = sim.tee().launch(platform, m);
    Handle scanner_b = sim.clone(scanner_a);

    // The tx lands in one branch of a forced fork.
    (void)sim.ledger().submit_tx(bite::kPayTxKind, bite::encode_pay(account, amount));
    sim.advance_time(interval);

    auto heads = sim.ledger().branch_heads();
    if (heads.size() < 2)
        throw ForklabError(ErrorCode::ConfigError, cfg.name + ": fork did not occur; use eventual mode with fork_probability 1");
    auto has_pay = [&](const Digest& head) {
        for (const Block& b : ChainView(&sim.ledger(), head).collect_all()) {
            for (const Tx& tx : b.txs)
                if (tx.kind == bite::kPayTxKind) return true;
        }
        return false;
    };
    size_t branch_with_tx = has_pay(heads[0]) ? 0 : 1;
    size_t branch_without = 1 - branch_with_tx;

    sim.connect(scanner_a, {NodeConnection::branch(branch_with_tx)});
    sim.connect(scanner_b, {NodeConnection::branch(branch_without)});
    SyncTracker sync;
    for (Handle h : {scanner_a, scanner_b}) {
        for (const Block& b : sync.pull(sim, h)) bite::feed_block(sim, h, b).expect("scan block");
    }

    auto reply_a = bite::bite_balance_query(sim, scanner_a, account).expect("balance a");
    auto reply_b = bite::bite_balance_query(sim, scanner_b, account).expect("balance b");

    if (cfg.variant == Variant::Vulnerable) {
        int64_t a = bite::parse_balance_vulnerable(reply_a).balance;
        int64_t b = bite::parse_balance_vulnerable(reply_b).balance;
        sim.log().record("bite_balances", {{"a", ev_i64(a)}, {"b", ev_i64(b)}});
        if (a != b) {
            sim.add_evidence(Evidence{EvidenceKind::DivergentResponses,
                                      {{"a", ev_i64(a)}, {"b", ev_i64(b)}}});
            outcome.verdict = AttackOutcome::Verdict::Succeeded;
        } else {
            outcome.verdict = AttackOutcome::Verdict::Failed;
        }
        return finalize(sim, outcome);
    }

    // Patched: the client checks height and hash against its own view; the
    // off-branch response is rejected, so no divergent pair is ever accepted.
    uint64_t signer = bite::scanner_signer_pk(sim, scanner_a);
    ChainView client_view = sim.ledger().canonical_view();
    auto a = bite::parse_balance_patched(sim.crypto(), reply_a, signer, client_view, window);
    auto b = bite::parse_balance_patched(sim.crypto(), reply_b, signer, client_view, window);
    uint64_t accepted = (a.ok() ? 1 : 0) + (b.ok() ? 1 : 0);
    if (!a.ok() && a.code() == ErrorCode::RejectForkMismatch)
        sim.add_evidence(Evidence{EvidenceKind::ForkMismatchRejected, {{"which", "a"}}});
    if (!b.ok() && b.code() == ErrorCode::RejectForkMismatch)
        sim.add_evidence(Evidence{EvidenceKind::ForkMismatchRejected, {{"which", "b"}}});
    if (accepted >= 2 && a.value().balance != b.value().balance) {
        sim.add_evidence(Evidence{EvidenceKind::DivergentResponses,
                                  {{"a", ev_i64(a.value().balance)},
                                   {"b", ev_i64(b.value().balance)}}});
        outcome.verdict = AttackOutcome::Verdict::Succeeded;
    } else {
        outcome.verdict = AttackOutcome::Verdict::Failed;
    }
    return finalize(sim, outcome);
}

// --- Dispatch ------------------------------------------------------------------------

AttackOutcome dispatch(Simulation& sim, const ScenarioConfig& cfg) {
    if (cfg.protocol == "raw_sm") return raw_sm::run(sim, cfg);
    if (cfg.protocol == "pouw") return run_pouw(sim, cfg);
    if (cfg.protocol == "proof_of_luck") return run_pol(sim, cfg);
    if (cfg.protocol == "twilight") return run_twilight(sim, cfg);
    if (cfg.protocol == "fastkitten_lottery") return run_fastkitten(sim, cfg);
    if (cfg.protocol == "ccf_kvs") return run_ccf(sim, cfg);
    if (cfg.protocol == "phala_worker") return run_phala(sim, cfg);
    if (cfg.protocol == "secret_query") return run_secret(sim, cfg);
    if (cfg.protocol == "ten_pobi") return run_ten(sim, cfg);
    if (cfg.protocol == "bite_fork") return run_bite(sim, cfg);
    throw ForklabError(ErrorCode::ConfigError, "unknown protocol: " + cfg.protocol);
}

// --- Micro-trials for the statistical protocols ---------------------------------------

bool trial_pouw(uint64_t seed, const ScenarioConfig& cfg) {
    PouwParams params = pouw_params(cfg);
    pouw::PoUwConfig pc;
    pc.diff = params.diff;
    pouw::Task task{params.n_instr, to_bytes("client-task")};
    Simulation sim(seed, cfg.consensus);
    PlatformId platform = sim.tee().add_platform();
    Measurement m = sim.tee().register_program(pouw::pouw_program(pc, cfg.variant));
    Handle miner = sim.tee().launch(platform, m);
    std::optional<uint64_t> required_pk;
    if (cfg.variant == Variant::Patched)
        required_pk = sim.tee().inspect(miner).ephemeral_keypair->pk;
    std::vector<Handle> instances{miner};
    for (uint64_t c = 1; c < params.clones; ++c) instances.push_back(sim.clone(miner));
    sim.advance_time(block_interval_of(cfg.consensus));
    Digest head = sim.ledger().canonical_view().head_hash();
    for (Handle h : instances) {
        auto proof = pouw::pouw_attempt(sim, h, task, head);
        if (!proof) continue;
        if (pouw::verify_proof(sim, *proof, pc, task, head, required_pk).ok()) return true;
    }
    return false;
}

bool trial_fastkitten(uint64_t seed, const ScenarioConfig& cfg) {
    FkParams params = fk_params(cfg);
    Simulation sim(seed, cfg.consensus);
    PlatformId platform = sim.tee().add_platform();
    fastkitten::LotterySetup setup = fastkitten::lottery_setup(sim, platform, params.k, cfg.variant);
    SealedBlob blob = sim.tee().seal(setup.enclave, sim.tee().inspect(setup.enclave).volatile_state);
    std::vector<Handle> instances{setup.enclave};
    for (uint64_t c = 1; c < params.clones; ++c)
        instances.push_back(sim.clone_with(setup.enclave, blob).expect("clone"));
    auto inputs = fastkitten::sign_round(sim, setup, instances.front());
    std::vector<mitigations::RoundResult> valid;
    for (Handle h : instances) {
        auto r = mitigations::fixed_client_round(sim, h, inputs);
        r.expect("round");
        if (cfg.variant == Variant::Patched &&
            !mitigations::verify_round_output(sim.crypto(), r.value(), setup.agreed_pk))
            continue;
        valid.push_back(r.value());
    }
    for (const auto& c : valid) {
        if (fastkitten::winner_of(c.inner_output) == params.favored) return true;
    }
    return false;
}

bool trial_ten(uint64_t seed, const ScenarioConfig& cfg) {
    ParamReader p(cfg.params, cfg.name + ".params");
    uint64_t honest_count = p.u64("honest_enclaves", 8);
    uint64_t clone_count = p.u64("clones", 2);
    (void)p.u64("rounds", 2000);
    p.finish();
    Simulation sim(seed, cfg.consensus);
    TenNet net = ten_setup(sim, cfg, honest_count, clone_count);
    sim.advance_time(block_interval_of(cfg.consensus));
    ChainView now = sim.ledger().canonical_view();
    const Block& head = now.head();
    std::vector<ten::TenRollup> submissions;
    for (Handle h : net.honest)
        submissions.push_back(ten::ten_propose(sim, h, head, 0).expect("proposal"));
    std::vector<ten::TenRollup> adv;
    for (Handle h : net.adversary)
        adv.push_back(ten::ten_propose(sim, h, head, 0).expect("proposal"));
    if (cfg.variant == Variant::Vulnerable) {
        size_t best = 0;
        for (size_t i = 1; i < adv.size(); ++i)
            if (adv[i].aggregator_nonce < adv[best].aggregator_nonce) best = i;
        submissions.push_back(adv[best]);
    } else {
        for (auto& r : adv) submissions.push_back(r);
    }
    auto settled =
        ten::ten_settle(sim, submissions, head.hash, cfg.variant, net.registry, net.signer_pk);
    if (!settled.ok()) return false;
    return settled.value().accepted.aggregator_l2_address == net.adversary_addr;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    Simulation sim(cfg.seed, cfg.consensus);
    sim.log().record("scenario_start", {{"name", cfg.name},
                                        {"protocol", cfg.protocol},
                                        {"variant", std::string(to_string(cfg.variant))},
                                        {"attack", std::string(to_string(cfg.attack))},
                                        {"seed", ev_u64(cfg.seed)}});
    ScenarioResult result;
    result.outcome = dispatch(sim, cfg);
    result.log = sim.log().lines();
    return result;
}

TrialStats run_trials(const ScenarioConfig& cfg, uint64_t n) {
    if (n < 100)
        throw ForklabError(ErrorCode::ConfigError, "trials must be at least 100");
    TrialStats stats;
    stats.n = n;
    for (uint64_t i = 0; i < n; ++i) {
        uint64_t trial_seed = mix_seed(cfg.seed, "trial", i);
        bool success = false;
        if (cfg.protocol == "pouw") {
            success = trial_pouw(trial_seed, cfg);
        } else if (cfg.protocol == "fastkitten_lottery") {
            success = trial_fastkitten(trial_seed, cfg);
        } else if (cfg.protocol == "ten_pobi") {
            success = trial_ten(trial_seed, cfg);
        } else {
            ScenarioConfig sub = cfg;
            sub.seed = trial_seed;
            Simulation sim(sub.seed, sub.consensus);
            success = dispatch(sim, sub).succeeded();
        }
        if (success) ++stats.successes;
    }
    stats.frequency = static_cast<double>(stats.successes) / n;
    auto ci = wilson95(stats.successes, n);
    stats.wilson_low = ci.low;
    stats.wilson_high = ci.high;
    return stats;
}

WilsonInterval wilson95(uint64_t successes, uint64_t n) {
    const double z = 1.959963984540054;
    double phat = static_cast<double>(successes) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (phat + z2 / (2.0 * n)) / denom;
    double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    WilsonInterval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
    if (successes == 0) ci.low = 0.0;    // the bound is exact at the edges
    if (successes == n) ci.high = 1.0;
    return ci;
}

std::string_view to_string(Cell c) {
    switch (c) {
        case Cell::AttackSucceeds: return "AttackSucceeds";
        case Cell::AttackFails: return "AttackFails";
        case Cell::NotApplicable: return "NotApplicable";
    }
    return "?";
}

const std::vector<std::pair<std::string, Variant>>& matrix_rows() {
    static const std::vector<std::pair<std::string, Variant>> rows = {
        {"pouw", Variant::Vulnerable},
        {"pouw", Variant::Patched},
        {"proof_of_luck", Variant::Vulnerable},
        {"twilight", Variant::Vulnerable},
        {"fastkitten_lottery", Variant::Vulnerable},
        {"fastkitten_lottery", Variant::Patched},
        {"ccf_kvs", Variant::Vulnerable},
        {"phala_worker", Variant::Vulnerable},
        {"phala_worker", Variant::Patched},
        {"secret_query", Variant::Vulnerable},
        {"secret_query", Variant::Patched},
        {"ten_pobi", Variant::Vulnerable},
        {"ten_pobi", Variant::Patched},
        {"bite_fork", Variant::Vulnerable},
        {"bite_fork", Variant::Patched},
    };
    return rows;
}

const std::vector<std::string>& protocol_ids() {
    static const std::vector<std::string> ids = {
        "raw_sm",       "pouw",         "proof_of_luck", "twilight", "fastkitten_lottery",
        "ccf_kvs",      "phala_worker", "secret_query",  "ten_pobi", "bite_fork",
    };
    return ids;
}

namespace {

std::string summarize_evidence(const AttackOutcome& outcome) {
    if (outcome.evidence.empty()) return "";
    const Evidence& e = outcome.evidence.front();
    std::string s(to_string(e.kind));
    if (!e.values.empty()) {
        s += "(";
        for (size_t i = 0; i < e.values.size() && i < 2; ++i) {
            if (i) s += ",";
            s += e.values[i].first + "=" + e.values[i].second;
        }
        s += ")";
    }
    return s;
}

MatrixCell cell_from(const AttackOutcome& outcome) {
    MatrixCell cell;
    switch (outcome.verdict) {
        case AttackOutcome::Verdict::Succeeded: cell.value = Cell::AttackSucceeds; break;
        case AttackOutcome::Verdict::Failed: cell.value = Cell::AttackFails; break;
        case AttackOutcome::Verdict::NotApplicable: cell.value = Cell::NotApplicable; break;
    }
    cell.evidence = summarize_evidence(outcome);
    return cell;
}

}  // namespace

MatrixReport run_matrix(const std::vector<ScenarioConfig>& corpus) {
    MatrixReport report;
    for (const auto& [protocol, variant] : matrix_rows()) {
        MatrixRow row;
        row.protocol = protocol;
        row.variant = variant;
        for (AttackKind attack : {AttackKind::Rollback, AttackKind::Cloning}) {
            const ScenarioConfig* found = nullptr;
            for (const ScenarioConfig& cfg : corpus) {
                if (cfg.protocol == protocol && cfg.variant == variant && cfg.attack == attack) {
                    found = &cfg;
                    break;
                }
            }
            if (!found)
                throw ForklabError(ErrorCode::IncompleteCorpus,
                                   "no scenario for " + protocol + "/" +
                                       std::string(to_string(variant)) + "/" +
                                       std::string(to_string(attack)));
            ScenarioResult r = run_scenario(*found);
            MatrixCell cell = cell_from(r.outcome);
            if (attack == AttackKind::Rollback) {
                row.rollback = cell;
            } else {
                row.cloning = cell;
            }
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

MatrixReport expected_matrix() {
    auto mk = [](const std::string& protocol, Variant v, Cell rb, Cell cl) {
        MatrixRow row;
        row.protocol = protocol;
        row.variant = v;
        row.rollback.value = rb;
        row.cloning.value = cl;
        return row;
    };
    MatrixReport m;
    using C = Cell;
    m.rows = {
        mk("pouw", Variant::Vulnerable, C::AttackFails, C::AttackSucceeds),
        mk("pouw", Variant::Patched, C::AttackFails, C::AttackFails),
        mk("proof_of_luck", Variant::Vulnerable, C::AttackFails, C::AttackFails),
        mk("twilight", Variant::Vulnerable, C::NotApplicable, C::AttackFails),
        mk("fastkitten_lottery", Variant::Vulnerable, C::AttackFails, C::AttackSucceeds),
        mk("fastkitten_lottery", Variant::Patched, C::AttackFails, C::AttackFails),
        mk("ccf_kvs", Variant::Vulnerable, C::AttackFails, C::AttackFails),
        mk("phala_worker", Variant::Vulnerable, C::AttackFails, C::AttackSucceeds),
        mk("phala_worker", Variant::Patched, C::AttackFails, C::AttackFails),
        mk("secret_query", Variant::Vulnerable, C::AttackSucceeds, C::AttackSucceeds),
        mk("secret_query", Variant::Patched, C::AttackFails, C::AttackFails),
        mk("ten_pobi", Variant::Vulnerable, C::AttackFails, C::AttackSucceeds),
        mk("ten_pobi", Variant::Patched, C::AttackFails, C::AttackFails),
        mk("bite_fork", Variant::Vulnerable, C::NotApplicable, C::AttackSucceeds),
        mk("bite_fork", Variant::Patched, C::NotApplicable, C::AttackFails),
    };
    return m;
}

bool matrix_cells_equal(const MatrixReport& a, const MatrixReport& b) {
    if (a.rows.size() != b.rows.size()) return false;
    for (size_t i = 0; i < a.rows.size(); ++i) {
        const MatrixRow& ra = a.rows[i];
        const MatrixRow& rb = b.rows[i];
        if (ra.protocol != rb.protocol || ra.variant != rb.variant) return false;
        if (ra.rollback.value != rb.rollback.value) return false;
        if (ra.cloning.value != rb.cloning.value) return false;
    }
    return true;
}

}  // namespace forklab::scenarios
