#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <variant>
#include <vector>

#include "forklab/enclave.hpp"
#include "forklab/events.hpp"
#include "forklab/ledger.hpp"

namespace forklab {

enum class AttackKind { None, Rollback, Cloning };
enum class Variant { Vulnerable, Patched };

std::string_view to_string(AttackKind k);
std::string_view to_string(Variant v);
AttackKind attack_kind_from_string(std::string_view s);
Variant variant_from_string(std::string_view s);

// Logical clock with a deterministic event queue: ties broken by insertion
// order, time never decreases.
class SimClock {
public:
    uint64_t now() const { return now_; }
    void schedule(uint64_t at, std::function<void()> fn);
    void schedule_in(uint64_t dt, std::function<void()> fn) { schedule(now_ + dt, std::move(fn)); }
    uint64_t next_event_time() const;  // UINT64_MAX when idle
    void advance_to(uint64_t t);

private:
    struct Pending {
        uint64_t at;
        uint64_t seq;
        std::function<void()> fn;
    };
    struct Later {
        bool operator()(const Pending& a, const Pending& b) const {
            if (a.at != b.at) return a.at > b.at;
            return a.seq > b.seq;
        }
    };
    std::priority_queue<Pending, std::vector<Pending>, Later> queue_;
    uint64_t now_ = 0;
    uint64_t seq_ = 0;
};

// --- Adversary script model --------------------------------------------------

struct ActLaunch {
    size_t platform_index = 0;
};
struct ActStep {
    size_t instance = 0;
    Bytes input;
};
struct ActSeal {
    size_t instance = 0;
};
// blob_seq indexes the blobs recorded so far for the instance's binding.
struct ActRestart {
    size_t instance = 0;
    std::optional<uint64_t> blob_seq;
};
struct ActClone {
    size_t instance = 0;
    std::optional<uint64_t> blob_seq;
};
struct ActIsolate {
    size_t instance = 0;
};
struct ActUnisolate {
    size_t instance = 0;
};
struct ActAdvanceTime {
    uint64_t ms = 0;
};
struct ActSubmitTx {
    std::string kind;
    Bytes payload;
};

using HostAction = std::variant<ActLaunch, ActStep, ActSeal, ActRestart, ActClone, ActIsolate,
                                ActUnisolate, ActAdvanceTime, ActSubmitTx>;

struct ScriptStep {
    HostAction action;
    // Optional guard over already-logged events (no clairvoyance): the step
    // runs only if some log line contains this substring.
    std::optional<std::string> only_if_logged;
};

struct AttackScript {
    AttackKind kind = AttackKind::None;
    std::vector<ScriptStep> steps;
};

// --- Outcome & evidence --------------------------------------------------------

enum class EvidenceKind {
    StaleResponseAccepted,
    DivergentResponses,
    ProposerAdvantage,
    DecryptionFailed,
    ViewMismatchDetected,
    StaleResponseRejected,
    ForkMismatchRejected,
    AddressMismatchRejected,
    StateMismatchDetected,
    CounterMismatchDetected,
    StaleAnchorRejected,
    UnregisteredIdRejected,
    SelectedOutput,
    MissedHeartbeat,
    RolledBackStateRestored,
    ForkedStates,
};

std::string_view to_string(EvidenceKind k);

struct Evidence {
    EvidenceKind kind;
    std::vector<std::pair<std::string, std::string>> values;
};

struct AttackOutcome {
    enum class Verdict { Succeeded, Failed, NotApplicable };
    AttackKind kind = AttackKind::None;
    Verdict verdict = Verdict::Failed;
    std::vector<Evidence> evidence;

    bool succeeded() const { return verdict == Verdict::Succeeded; }
};

std::string_view to_string(AttackOutcome::Verdict v);

// --- Simulation ----------------------------------------------------------------

// One scenario's world: deterministic clock, TEE layer, ledger, connectivity
// and isolation state, the event log, and the adversary-facing operations.
class Simulation {
public:
    Simulation(uint64_t seed, ConsensusMode mode);

    uint64_t seed() const { return seed_; }
    SimClock& clock() { return clock_; }
    EventLog& log() { return log_; }
    ToyCrypto& crypto() { return crypto_; }
    const ToyCrypto& crypto() const { return crypto_; }
    TeeWorld& tee() { return tee_; }
    Ledger& ledger() { return ledger_; }

    RngStream make_stream(std::string_view domain) {
        return RngStream(mix_seed(seed_, domain));
    }

    // Advances logical time, interleaving scheduled events and block
    // production in timestamp order; on_blocks subscribers see each batch.
    void advance_time(uint64_t dt_ms);
    void on_blocks(std::function<void(const std::vector<Block>&)> fn);

    void connect(Handle h, std::vector<NodeConnection> connections);
    void isolate(Handle h);
    void unisolate(Handle h);
    bool isolated(Handle h) const;
    Result<ChainView> read_view(Handle h) const;

    // Host-level enclave control (logged).
    Handle clone(Handle h);
    Result<Handle> clone_with(Handle h, const SealedBlob& blob);
    Result<Handle> restart_with(Handle h, const std::optional<SealedBlob>& blob);

    // Message-level adversary verbs.
    Output deliver(Handle to, const Input& message);
    void drop_message(std::string_view what);
    Bytes modify(const Bytes& message, const std::function<void(Bytes&)>& mutation);

    // Returns the index of the first candidate satisfying the predicate,
    // else fallback; the choice is logged.
    size_t select_output(const std::vector<Output>& candidates, std::string_view predicate_name,
                         const std::function<bool(const Output&)>& pred, size_t fallback = 0);

    void add_evidence(Evidence e);
    const std::vector<Evidence>& evidence() const { return evidence_; }

private:
    uint64_t seed_;
    SimClock clock_;
    EventLog log_;
    ToyCrypto crypto_;
    TeeWorld tee_;
    Ledger ledger_;
    std::map<Handle, std::vector<NodeConnection>> connections_;
    std::map<Handle, bool> isolated_;
    std::vector<std::function<void(const std::vector<Block>&)>> block_subs_;
    std::vector<Evidence> evidence_;
};

// Runs a declarative script against a target program on one platform; used
// by the raw state-machine scenarios and replayable by construction.
struct ScriptRunResult {
    std::vector<Handle> instances;              // index -> latest handle
    std::vector<SealedBlob> blobs;              // every blob sealed, in order
};
ScriptRunResult run_script(Simulation& sim, const Measurement& program,
                           const std::vector<PlatformId>& platforms, const AttackScript& script);

}  // namespace forklab
