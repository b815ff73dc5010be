#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forklab/enclave.hpp"
#include "forklab/host.hpp"
#include "forklab/ledger.hpp"

namespace forklab::mitigations {

// --- Stateless enclaves -------------------------------------------------------

// Build-time gate: programs that seal evolving state cannot be wrapped.
// Stateless programs may still load immutable config; restarts always go
// back to init, so there is nothing to roll back.
EnclaveProgram stateless_wrap(const EnclaveProgram& program);

// --- Ephemeral identities -------------------------------------------------------

struct EphemeralIdPolicy {
    enum class Registry { Ledger, None };
    Registry registry = Registry::Ledger;
};

inline constexpr const char* kEphemeralRegisterTxKind = "ephemeral-register";

// Ledger-side registry: at most one active key per role; an occupied role
// is only replaced by a superseding registration signed by the new instance.
class EphemeralIdRegistry : public TxValidator {
public:
    Result<void> check(const Tx& tx, const Ledger& ledger) override;
    std::optional<uint64_t> active_key(const std::string& role) const;

private:
    std::map<std::string, uint64_t> active_;
};

struct RegistrationTx {
    std::string role;
    uint64_t pk = 0;
    std::optional<uint64_t> supersedes;
    Bytes signature;
};

Bytes encode_registration(const RegistrationTx& reg);
RegistrationTx decode_registration(const Bytes& payload);

// Builds the enclave-signed registration for an instance's ephemeral key and
// submits it; fails validation per the registry rules.
Result<uint64_t> ephemeral_register(Simulation& sim, Handle h, const std::string& role,
                                    std::optional<uint64_t> supersedes = std::nullopt);

// --- Fixed set of clients --------------------------------------------------------

struct SignedRoundInput {
    uint64_t client_pk = 0;
    Digest state_digest{};
    Bytes input;
    Bytes signature;
};

SignedRoundInput sign_round_input(const CryptoProvider& crypto, const KeyPair& client,
                                  const Digest& state_digest, Bytes input);

// Wraps a program so a round executes only when every fixed client signed
// (current digest, input) and the digest matches the enclave's local state.
// With sign_outputs set, round outputs carry a signature under the
// instance's ephemeral key (anti-cloning addition).
EnclaveProgram fixed_client_wrap(const EnclaveProgram& inner, std::vector<uint64_t> client_pks,
                                 bool sign_outputs = false);

struct RoundResult {
    Output inner_output;
    Digest new_digest{};
    uint64_t round = 0;
    std::optional<uint64_t> signer_pk;  // present when outputs are signed
    Bytes signature;
};

// Drives one round; returns StateMismatch / BadSignature as modeled errors.
Result<RoundResult> fixed_client_round(Simulation& sim, Handle h,
                                       const std::vector<SignedRoundInput>& inputs);

Digest fixed_client_state_digest(const CryptoProvider& crypto, const TeeWorld& world, Handle h);

// Client-side check of a signed round output (patched FastKitten path).
bool verify_round_output(const CryptoProvider& crypto, const RoundResult& r, uint64_t expected_pk);

// --- Serializing state ---------------------------------------------------------

enum class TimestampVariant { PlainHeight, HeightAndHash, Range, HeartbeatAck };

struct SerializationPolicy {
    enum class Option { ReplayRecovery, Timestamping, StateOnLedger };
    Option option = Option::Timestamping;
    TimestampVariant variant = TimestampVariant::PlainHeight;
    uint64_t freshness_window = 1;  // blocks
    uint64_t range_min = 0;         // Range variant, client-chosen [m, M]
    uint64_t range_max = UINT64_MAX;
    uint64_t heartbeat_period_ms = 0;  // HeartbeatAck variant
};

struct TimestampedResponse {
    Bytes payload;
    uint64_t height = 0;
    std::optional<Digest> block_hash;
    Bytes signature;
};

// Canonical layout: payload blob, height u64, hash flag byte + digest,
// then the enclave signature over everything before it.
Bytes encode_timestamped_response(const TimestampedResponse& r);
TimestampedResponse decode_timestamped_response(const Bytes& b);

TimestampedResponse timestamp_response(const CryptoProvider& crypto, uint64_t enclave_sk,
                                       Bytes payload, uint64_t height,
                                       std::optional<Digest> block_hash);

enum class VerifyVerdict { Accept, RejectStale, RejectForkMismatch, BadSignature };
std::string_view to_string(VerifyVerdict v);

VerifyVerdict client_verify(const CryptoProvider& crypto, const TimestampedResponse& r,
                            uint64_t enclave_pk, const ChainView& client_view,
                            TimestampVariant variant, uint64_t freshness_window);

// Enclave-side gates for the Range and HeartbeatAck variants.
Result<void> range_gate(uint64_t enclave_height, uint64_t range_min, uint64_t range_max);
Result<void> heartbeat_ack_gate(std::optional<uint64_t> last_ack_ms, uint64_t now_ms,
                                uint64_t heartbeat_period_ms);

// Option 1: recover a fresh instance by folding program steps over a
// host-supplied block sequence; validates the hash chain, not freshness.
using TxMapper = std::function<std::optional<Input>(const Tx&)>;
Result<uint64_t> replay_recover(TeeWorld& world, Handle h, const std::vector<Block>& blocks,
                                const TxMapper& mapper);

// Option 3: hash-linked state commits validated by the ledger.
inline constexpr const char* kStateCommitTxKind = "state-commit";

struct StateCommitTx {
    std::string contract;
    Digest prev_digest{};
    Digest new_digest{};
    Digest anchor_hash{};
};

Bytes encode_state_commit(const StateCommitTx& c);
StateCommitTx decode_state_commit(const Bytes& payload);

class StateCommitValidator : public TxValidator {
public:
    explicit StateCommitValidator(uint64_t anchor_window = 1) : anchor_window_(anchor_window) {}
    void register_contract(const std::string& contract, const Digest& genesis_digest);
    Result<void> check(const Tx& tx, const Ledger& ledger) override;
    std::optional<Digest> committed_head(const std::string& contract) const;

private:
    uint64_t anchor_window_;
    std::map<std::string, Digest> heads_;
};

Result<uint64_t> state_commit(Simulation& sim, const std::string& contract, const Digest& prev,
                              const Digest& next, const Digest& anchor_hash);

}  // namespace forklab::mitigations
