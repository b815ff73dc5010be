#include "forklab/host.hpp"

#include <algorithm>

#include "forklab/codec.hpp"

namespace forklab {

std::string_view to_string(AttackKind k) {
    switch (k) {
        case AttackKind::None: return "none";
        case AttackKind::Rollback: return "rollback";
        case AttackKind::Cloning: return "cloning";
    }
    return "?";
}

std::string_view to_string(Variant v) {
    return v == Variant::Vulnerable ? "vulnerable" : "patched";
}

AttackKind attack_kind_from_string(std::string_view s) {
    if (s == "none") return AttackKind::None;
    if (s == "rollback") return AttackKind::Rollback;
    if (s == "cloning") return AttackKind::Cloning;
    throw ForklabError(ErrorCode::ConfigError, "unknown attack kind: " + std::string(s));
}

Variant variant_from_string(std::string_view s) {
    if (s == "vulnerable") return Variant::Vulnerable;
    if (s == "patched") return Variant::Patched;
    throw ForklabError(ErrorCode::ConfigError, "unknown variant: " + std::string(s));
}

std::string_view to_string(EvidenceKind k) {
    switch (k) {
        case EvidenceKind::StaleResponseAccepted: return "StaleResponseAccepted";
        case EvidenceKind::DivergentResponses: return "DivergentResponses";
        case EvidenceKind::ProposerAdvantage: return "ProposerAdvantage";
        case EvidenceKind::DecryptionFailed: return "DecryptionFailed";
        case EvidenceKind::ViewMismatchDetected: return "ViewMismatchDetected";
        case EvidenceKind::StaleResponseRejected: return "StaleResponseRejected";
        case EvidenceKind::ForkMismatchRejected: return "ForkMismatchRejected";
        case EvidenceKind::AddressMismatchRejected: return "AddressMismatchRejected";
        case EvidenceKind::StateMismatchDetected: return "StateMismatchDetected";
        case EvidenceKind::CounterMismatchDetected: return "CounterMismatchDetected";
        case EvidenceKind::StaleAnchorRejected: return "StaleAnchorRejected";
        case EvidenceKind::UnregisteredIdRejected: return "UnregisteredIdRejected";
        case EvidenceKind::SelectedOutput: return "SelectedOutput";
        case EvidenceKind::MissedHeartbeat: return "MissedHeartbeat";
        case EvidenceKind::RolledBackStateRestored: return "RolledBackStateRestored";
        case EvidenceKind::ForkedStates: return "ForkedStates";
    }
    return "?";
}

std::string_view to_string(AttackOutcome::Verdict v) {
    switch (v) {
        case AttackOutcome::Verdict::Succeeded: return "succeeded";
        case AttackOutcome::Verdict::Failed: return "failed";
        case AttackOutcome::Verdict::NotApplicable: return "not_applicable";
    }
    return "?";
}

// --- SimClock ----------------------------------------------------------------

void SimClock::schedule(uint64_t at, std::function<void()> fn) {
    if (at < now_) at = now_;
    queue_.push(Pending{at, seq_++, std::move(fn)});
}

uint64_t SimClock::next_event_time() const {
    return queue_.empty() ? UINT64_MAX : queue_.top().at;
}

void SimClock::advance_to(uint64_t t) {
    if (t < now_) return;
    while (!queue_.empty() && queue_.top().at <= t) {
        Pending ev = queue_.top();
        queue_.pop();
        now_ = ev.at;
        ev.fn();
    }
    now_ = t;
}

// --- Simulation ----------------------------------------------------------------

Simulation::Simulation(uint64_t seed, ConsensusMode mode)
    : seed_(seed),
      tee_(crypto_, seed, &log_),
      ledger_(mode, seed, &log_) {
    log_.set_time_source([this] { return clock_.now(); });
}

void Simulation::advance_time(uint64_t dt_ms) {
    const uint64_t target = clock_.now() + dt_ms;
    const uint64_t interval = block_interval_of(ledger_.mode());
    while (true) {
        uint64_t next_block = (ledger_.now_ms() / interval + 1) * interval;
        uint64_t next_ev = clock_.next_event_time();
        uint64_t next = std::min({target, next_block, next_ev});
        if (next > ledger_.now_ms()) {
            auto blocks = ledger_.advance(next - ledger_.now_ms());
            if (!blocks.empty()) {
                clock_.advance_to(next);
                for (auto& fn : block_subs_) fn(blocks);
            }
        }
        clock_.advance_to(next);
        if (next == target) break;
    }
}

void Simulation::on_blocks(std::function<void(const std::vector<Block>&)> fn) {
    block_subs_.push_back(std::move(fn));
}

void Simulation::connect(Handle h, std::vector<NodeConnection> connections) {
    connections_[h] = std::move(connections);
}

void Simulation::isolate(Handle h) {
    isolated_[h] = true;
    log_.record("isolate", {{"handle", ev_u64(h.value)}});
}

void Simulation::unisolate(Handle h) {
    isolated_[h] = false;
    log_.record("unisolate", {{"handle", ev_u64(h.value)}});
}

bool Simulation::isolated(Handle h) const {
    auto it = isolated_.find(h);
    return it != isolated_.end() && it->second;
}

Result<ChainView> Simulation::read_view(Handle h) const {
    if (isolated(h)) return make_error(ErrorCode::NoConnections, "instance is isolated");
    auto it = connections_.find(h);
    if (it == connections_.end() || it->second.empty())
        return make_error(ErrorCode::NoConnections, "instance has no connections");
    return ledger_.serve_view(it->second);
}

Handle Simulation::clone(Handle h) {
    return tee_.clone_instance(h);
}

Result<Handle> Simulation::clone_with(Handle h, const SealedBlob& blob) {
    return tee_.clone_instance(h, blob);
}

Result<Handle> Simulation::restart_with(Handle h, const std::optional<SealedBlob>& blob) {
    auto fresh = tee_.restart_with(h, blob);
    if (fresh.ok()) {
        // Connectivity and isolation follow the logical node, not the handle.
        Handle nh = fresh.value();
        auto cit = connections_.find(h);
        if (cit != connections_.end()) connections_[nh] = cit->second;
        auto iit = isolated_.find(h);
        if (iit != isolated_.end()) isolated_[nh] = iit->second;
    }
    return fresh;
}

Output Simulation::deliver(Handle to, const Input& message) {
    log_.record("deliver", {{"to", ev_u64(to.value)},
                            {"msg", short_hex(crypto_.hash(message))}});
    return tee_.step(to, message);
}

void Simulation::drop_message(std::string_view what) {
    log_.record("drop", {{"what", std::string(what)}});
}

Bytes Simulation::modify(const Bytes& message, const std::function<void(Bytes&)>& mutation) {
    Bytes out = message;
    mutation(out);
    log_.record("modify", {{"before", short_hex(crypto_.hash(message))},
                           {"after", short_hex(crypto_.hash(out))}});
    return out;
}

size_t Simulation::select_output(const std::vector<Output>& candidates,
                                 std::string_view predicate_name,
                                 const std::function<bool(const Output&)>& pred, size_t fallback) {
    size_t chosen = fallback;
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (pred(candidates[i])) {
            chosen = i;
            break;
        }
    }
    log_.record("select_output", {{"candidates", ev_u64(candidates.size())},
                                  {"predicate", std::string(predicate_name)},
                                  {"chosen", ev_u64(chosen)}});
    return chosen;
}

void Simulation::add_evidence(Evidence e) {
    std::vector<EventLog::Field> fields;
    fields.emplace_back("kind", std::string(to_string(e.kind)));
    for (const auto& [k, v] : e.values) fields.emplace_back(k, v);
    log_.record("evidence", fields);
    evidence_.push_back(std::move(e));
}

// --- Script interpreter ---------------------------------------------------------

ScriptRunResult run_script(Simulation& sim, const Measurement& program,
                           const std::vector<PlatformId>& platforms, const AttackScript& script) {
    ScriptRunResult r;
    auto instance_at = [&](size_t idx) -> Handle {
        if (idx >= r.instances.size())
            throw ForklabError(ErrorCode::ConfigError, "script references unknown instance");
        return r.instances[idx];
    };
    auto blob_by_seq = [&](uint64_t seq) -> const SealedBlob& {
        for (const SealedBlob& b : r.blobs) {
            if (b.seq_hint == seq) return b;
        }
        throw ForklabError(ErrorCode::ConfigError, "script references unknown blob seq");
    };

    for (const ScriptStep& step : script.steps) {
        if (step.only_if_logged) {
            bool seen = false;
            for (const auto& line : sim.log().lines()) {
                if (line.find(*step.only_if_logged) != std::string::npos) {
                    seen = true;
                    break;
                }
            }
            if (!seen) continue;
        }
        std::visit(
            [&](const auto& act) {
                using T = std::decay_t<decltype(act)>;
                if constexpr (std::is_same_v<T, ActLaunch>) {
                    if (act.platform_index >= platforms.size())
                        throw ForklabError(ErrorCode::ConfigError, "script platform index out of range");
                    r.instances.push_back(sim.tee().launch(platforms[act.platform_index], program));
                } else if constexpr (std::is_same_v<T, ActStep>) {
                    sim.tee().step(instance_at(act.instance), act.input);
                } else if constexpr (std::is_same_v<T, ActSeal>) {
                    Handle h = instance_at(act.instance);
                    const State& s = sim.tee().inspect(h).volatile_state;
                    r.blobs.push_back(sim.tee().seal(h, s));
                } else if constexpr (std::is_same_v<T, ActRestart>) {
                    std::optional<SealedBlob> blob;
                    if (act.blob_seq) blob = blob_by_seq(*act.blob_seq);
                    Handle fresh = sim.restart_with(instance_at(act.instance), blob)
                                       .expect("script restart");
                    r.instances[act.instance] = fresh;
                } else if constexpr (std::is_same_v<T, ActClone>) {
                    Handle fresh;
                    if (act.blob_seq) {
                        fresh = sim.clone_with(instance_at(act.instance), blob_by_seq(*act.blob_seq))
                                    .expect("script clone");
                    } else {
                        fresh = sim.clone(instance_at(act.instance));
                    }
                    r.instances.push_back(fresh);
                } else if constexpr (std::is_same_v<T, ActIsolate>) {
                    sim.isolate(instance_at(act.instance));
                } else if constexpr (std::is_same_v<T, ActUnisolate>) {
                    sim.unisolate(instance_at(act.instance));
                } else if constexpr (std::is_same_v<T, ActAdvanceTime>) {
                    sim.advance_time(act.ms);
                } else if constexpr (std::is_same_v<T, ActSubmitTx>) {
                    (void)sim.ledger().submit_tx(act.kind, act.payload);
                }
            },
            step.action);
    }
    return r;
}

}  // namespace forklab
