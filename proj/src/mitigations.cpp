#include "forklab/mitigations.hpp"

#include "forklab/codec.hpp"

namespace forklab::mitigations {

// --- Stateless -----------------------------------------------------------------

EnclaveProgram stateless_wrap(const EnclaveProgram& program) {
    if (program.mutable_persistent_state) {
        throw ForklabError(ErrorCode::PolicyViolation,
                           "program seals mutable state and cannot be made stateless: " +
                               program.name);
    }
    return program;
}

// --- Ephemeral identities --------------------------------------------------------

namespace {

Bytes registration_message(const RegistrationTx& reg) {
    ByteWriter w;
    w.str(kEphemeralRegisterTxKind).str(reg.role).u64(reg.pk);
    w.u8(reg.supersedes ? 1 : 0);
    if (reg.supersedes) w.u64(*reg.supersedes);
    return w.take();
}

}  // namespace

Bytes encode_registration(const RegistrationTx& reg) {
    ByteWriter w;
    w.raw(registration_message(reg));
    w.blob(reg.signature);
    return w.take();
}

RegistrationTx decode_registration(const Bytes& payload) {
    ByteReader r(payload);
    RegistrationTx reg;
    if (r.str() != kEphemeralRegisterTxKind)
        throw ForklabError(ErrorCode::MalformedMessage, "not a registration tx");
    reg.role = r.str();
    reg.pk = r.u64();
    if (r.u8() != 0) reg.supersedes = r.u64();
    reg.signature = r.blob();
    return reg;
}

Result<void> EphemeralIdRegistry::check(const Tx& tx, const Ledger& ledger) {
    (void)ledger;
    RegistrationTx reg;
    try {
        reg = decode_registration(tx.payload);
    } catch (const ForklabError&) {
        return make_error(ErrorCode::ValidationFailed, "malformed registration");
    }
    auto it = active_.find(reg.role);
    if (it != active_.end()) {
        if (!reg.supersedes || *reg.supersedes != it->second) {
            return make_error(ErrorCode::ValidationFailed,
                              "role occupied; superseding registration required");
        }
    } else if (reg.supersedes) {
        return make_error(ErrorCode::ValidationFailed, "nothing to supersede for role");
    }
    active_[reg.role] = reg.pk;
    return {};
}

std::optional<uint64_t> EphemeralIdRegistry::active_key(const std::string& role) const {
    auto it = active_.find(role);
    if (it == active_.end()) return std::nullopt;
    return it->second;
}

Result<uint64_t> ephemeral_register(Simulation& sim, Handle h, const std::string& role,
                                    std::optional<uint64_t> supersedes) {
    const EnclaveInstance& inst = sim.tee().inspect(h);
    if (!inst.ephemeral_keypair)
        throw ForklabError(ErrorCode::PolicyViolation, "instance has no ephemeral keypair");
    RegistrationTx reg;
    reg.role = role;
    reg.pk = inst.ephemeral_keypair->pk;
    reg.supersedes = supersedes;
    reg.signature = sim.crypto().sign(inst.ephemeral_keypair->sk, registration_message(reg));
    return sim.ledger().submit_tx(kEphemeralRegisterTxKind, encode_registration(reg));
}

// --- Fixed set of clients --------------------------------------------------------

namespace {

Bytes round_input_message(const Digest& state_digest, const Bytes& input) {
    ByteWriter w;
    w.str("fixed-client-input").digest(state_digest).blob(input);
    return w.take();
}

struct WrappedState {
    uint64_t round = 0;
    State inner;
};

Bytes encode_wrapped_state(const WrappedState& s) {
    ByteWriter w;
    w.u64(s.round).blob(s.inner);
    return w.take();
}

WrappedState decode_wrapped_state(const State& s) {
    ByteReader r(s);
    WrappedState w;
    w.round = r.u64();
    w.inner = r.blob();
    return w;
}

constexpr uint8_t kRoundOk = 0;
constexpr uint8_t kRoundStateMismatch = 1;
constexpr uint8_t kRoundBadSignature = 2;

Bytes round_output_core(uint64_t round, const Output& inner_output, const Digest& new_digest) {
    ByteWriter w;
    w.u8(kRoundOk).u64(round).blob(inner_output).digest(new_digest);
    return w.take();
}

}  // namespace

SignedRoundInput sign_round_input(const CryptoProvider& crypto, const KeyPair& client,
                                  const Digest& state_digest, Bytes input) {
    SignedRoundInput s;
    s.client_pk = client.pk;
    s.state_digest = state_digest;
    s.input = std::move(input);
    s.signature = crypto.sign(client.sk, round_input_message(state_digest, s.input));
    return s;
}

EnclaveProgram fixed_client_wrap(const EnclaveProgram& inner, std::vector<uint64_t> client_pks,
                                 bool sign_outputs) {
    EnclaveProgram p = inner;
    p.name = inner.name + ".fixed-clients";
    {
        ByteWriter w;
        w.blob(inner.params).u8(sign_outputs ? 1 : 0);
        w.u32(static_cast<uint32_t>(client_pks.size()));
        for (uint64_t pk : client_pks) w.u64(pk);
        p.params = w.take();
    }
    p.wants_ephemeral_keys = p.wants_ephemeral_keys || sign_outputs;
    auto inner_init = inner.init;
    auto inner_step = inner.step;
    p.init = [inner_init] {
        WrappedState s;
        s.round = 0;
        s.inner = inner_init ? inner_init() : State{};
        return encode_wrapped_state(s);
    };
    p.step = [inner_step, client_pks, sign_outputs](const State& state, const Input& input,
                                                    EnclaveContext& ctx) -> StepResult {
        WrappedState s = decode_wrapped_state(state);
        Digest local = ctx.crypto().hash(state);

        // Input: one signed (digest, input) per client, in client order.
        std::vector<SignedRoundInput> signed_inputs;
        ByteReader r(input);
        uint32_t n = r.u32();
        for (uint32_t i = 0; i < n; ++i) {
            SignedRoundInput si;
            si.client_pk = r.u64();
            si.state_digest = r.digest();
            si.input = r.blob();
            si.signature = r.blob();
            signed_inputs.push_back(std::move(si));
        }

        std::vector<uint64_t> offenders;
        bool bad_sig = false;
        if (signed_inputs.size() != client_pks.size()) bad_sig = true;
        for (size_t i = 0; !bad_sig && i < signed_inputs.size(); ++i) {
            const auto& si = signed_inputs[i];
            if (si.client_pk != client_pks[i] ||
                !ctx.crypto().verify(si.client_pk, round_input_message(si.state_digest, si.input),
                                     si.signature)) {
                bad_sig = true;
                offenders.push_back(si.client_pk);
            }
        }
        if (bad_sig) {
            ByteWriter w;
            w.u8(kRoundBadSignature).u32(static_cast<uint32_t>(offenders.size()));
            for (uint64_t pk : offenders) w.u64(pk);
            return {state, w.take()};
        }
        for (const auto& si : signed_inputs) {
            if (si.state_digest != local) offenders.push_back(si.client_pk);
        }
        if (!offenders.empty()) {
            ByteWriter w;
            w.u8(kRoundStateMismatch).u32(static_cast<uint32_t>(offenders.size()));
            for (uint64_t pk : offenders) w.u64(pk);
            return {state, w.take()};
        }

        // Digest matched everywhere: execute the inner round.
        ByteWriter iw;
        iw.u32(static_cast<uint32_t>(signed_inputs.size()));
        for (const auto& si : signed_inputs) iw.blob(si.input);
        StepResult inner_r = inner_step(s.inner, iw.bytes(), ctx);

        WrappedState next;
        next.round = s.round + 1;
        next.inner = std::move(inner_r.state);
        State next_state = encode_wrapped_state(next);
        Digest new_digest = ctx.crypto().hash(next_state);

        Bytes core = round_output_core(next.round, inner_r.output, new_digest);
        ByteWriter ow;
        ow.raw(core);
        if (sign_outputs) {
            const auto& kp = ctx.ephemeral_keypair();
            ow.u8(1).u64(kp->pk).blob(ctx.crypto().sign(kp->sk, core));
        } else {
            ow.u8(0);
        }
        return {std::move(next_state), ow.take()};
    };
    return p;
}

Result<RoundResult> fixed_client_round(Simulation& sim, Handle h,
                                       const std::vector<SignedRoundInput>& inputs) {
    ByteWriter w;
    w.u32(static_cast<uint32_t>(inputs.size()));
    for (const auto& si : inputs) {
        w.u64(si.client_pk).digest(si.state_digest).blob(si.input).blob(si.signature);
    }
    Output out = sim.tee().step(h, w.take());

    ByteReader r(out);
    uint8_t status = r.u8();
    if (status == kRoundStateMismatch || status == kRoundBadSignature) {
        uint32_t n = r.u32();
        std::string ids;
        for (uint32_t i = 0; i < n; ++i) {
            if (i) ids += ',';
            ids += std::to_string(r.u64());
        }
        if (status == kRoundStateMismatch)
            return make_error(ErrorCode::StateMismatch, "offending clients: " + ids);
        return make_error(ErrorCode::BadSignature, "offending clients: " + ids);
    }
    RoundResult rr;
    rr.round = r.u64();
    rr.inner_output = r.blob();
    rr.new_digest = r.digest();
    if (r.u8() != 0) {
        rr.signer_pk = r.u64();
        rr.signature = r.blob();
    }
    return rr;
}

Digest fixed_client_state_digest(const CryptoProvider& crypto, const TeeWorld& world, Handle h) {
    return crypto.hash(world.inspect(h).volatile_state);
}

bool verify_round_output(const CryptoProvider& crypto, const RoundResult& r, uint64_t expected_pk) {
    if (!r.signer_pk || *r.signer_pk != expected_pk) return false;
    Bytes core = round_output_core(r.round, r.inner_output, r.new_digest);
    return crypto.verify(expected_pk, core, r.signature);
}

// --- Timestamping ----------------------------------------------------------------

namespace {

Bytes timestamped_core(const TimestampedResponse& r) {
    ByteWriter w;
    w.blob(r.payload).u64(r.height);
    if (r.block_hash) {
        w.u8(1).digest(*r.block_hash);
    } else {
        w.u8(0);
    }
    return w.take();
}

}  // namespace

Bytes encode_timestamped_response(const TimestampedResponse& r) {
    ByteWriter w;
    w.raw(timestamped_core(r));
    w.blob(r.signature);
    return w.take();
}

TimestampedResponse decode_timestamped_response(const Bytes& b) {
    ByteReader r(b);
    TimestampedResponse out;
    out.payload = r.blob();
    out.height = r.u64();
    if (r.u8() != 0) out.block_hash = r.digest();
    out.signature = r.blob();
    return out;
}

TimestampedResponse timestamp_response(const CryptoProvider& crypto, uint64_t enclave_sk,
                                       Bytes payload, uint64_t height,
                                       std::optional<Digest> block_hash) {
    TimestampedResponse r;
    r.payload = std::move(payload);
    r.height = height;
    r.block_hash = block_hash;
    r.signature = crypto.sign(enclave_sk, timestamped_core(r));
    return r;
}

std::string_view to_string(VerifyVerdict v) {
    switch (v) {
        case VerifyVerdict::Accept: return "accept";
        case VerifyVerdict::RejectStale: return "reject_stale";
        case VerifyVerdict::RejectForkMismatch: return "reject_fork_mismatch";
        case VerifyVerdict::BadSignature: return "bad_signature";
    }
    return "?";
}

VerifyVerdict client_verify(const CryptoProvider& crypto, const TimestampedResponse& r,
                            uint64_t enclave_pk, const ChainView& client_view,
                            TimestampVariant variant, uint64_t freshness_window) {
    if (!crypto.verify(enclave_pk, timestamped_core(r), r.signature))
        return VerifyVerdict::BadSignature;
    uint64_t head = client_view.head_height();
    if (r.height + freshness_window < head) return VerifyVerdict::RejectStale;
    if (variant == TimestampVariant::HeightAndHash) {
        if (!r.block_hash) return VerifyVerdict::RejectForkMismatch;
        // Heights above the client's head cannot be checked against its
        // chain; staleness, not forwardness, is what this check polices.
        if (r.height <= head && !client_view.contains(r.height, *r.block_hash))
            return VerifyVerdict::RejectForkMismatch;
    }
    return VerifyVerdict::Accept;
}

Result<void> range_gate(uint64_t enclave_height, uint64_t range_min, uint64_t range_max) {
    if (enclave_height < range_min || enclave_height > range_max) {
        return make_error(ErrorCode::NotInRange,
                          "enclave height " + std::to_string(enclave_height) + " outside [" +
                              std::to_string(range_min) + ", " + std::to_string(range_max) + "]");
    }
    return {};
}

Result<void> heartbeat_ack_gate(std::optional<uint64_t> last_ack_ms, uint64_t now_ms,
                                uint64_t heartbeat_period_ms) {
    // Serve only while the latest heartbeat acknowledgment is at most two
    // periods old; one missed block is tolerated.
    if (!last_ack_ms || now_ms > *last_ack_ms + 2 * heartbeat_period_ms)
        return make_error(ErrorCode::NoAck, "no recent heartbeat acknowledgment");
    return {};
}

// --- Replay recovery --------------------------------------------------------------

Result<uint64_t> replay_recover(TeeWorld& world, Handle h, const std::vector<Block>& blocks,
                                const TxMapper& mapper) {
    if (blocks.empty()) return make_error(ErrorCode::BrokenChain, "empty view");
    for (size_t i = 0; i < blocks.size(); ++i) {
        const Block& b = blocks[i];
        if (block_content_hash(b.parent_hash, b.height, b.txs, b.proposer) != b.hash)
            return make_error(ErrorCode::BrokenChain, "block hash mismatch at height " +
                                                          std::to_string(b.height));
        if (i > 0) {
            if (b.height != blocks[i - 1].height + 1 || b.parent_hash != blocks[i - 1].hash)
                return make_error(ErrorCode::BrokenChain, "parent discontinuity at height " +
                                                              std::to_string(b.height));
        }
    }
    for (const Block& b : blocks) {
        for (const Tx& tx : b.txs) {
            if (auto input = mapper(tx)) world.step(h, *input);
        }
    }
    return blocks.back().height;
}

// --- State on ledger ---------------------------------------------------------------

Bytes encode_state_commit(const StateCommitTx& c) {
    ByteWriter w;
    w.str(c.contract).digest(c.prev_digest).digest(c.new_digest).digest(c.anchor_hash);
    return w.take();
}

StateCommitTx decode_state_commit(const Bytes& payload) {
    ByteReader r(payload);
    StateCommitTx c;
    c.contract = r.str();
    c.prev_digest = r.digest();
    c.new_digest = r.digest();
    c.anchor_hash = r.digest();
    return c;
}

void StateCommitValidator::register_contract(const std::string& contract,
                                             const Digest& genesis_digest) {
    heads_[contract] = genesis_digest;
}

Result<void> StateCommitValidator::check(const Tx& tx, const Ledger& ledger) {
    StateCommitTx c;
    try {
        c = decode_state_commit(tx.payload);
    } catch (const ForklabError&) {
        return make_error(ErrorCode::ValidationFailed, "malformed state commit");
    }
    auto it = heads_.find(c.contract);
    if (it == heads_.end())
        return make_error(ErrorCode::ValidationFailed, "unknown contract: " + c.contract);
    // Anchor must be the canonical head or within the window behind it.
    ChainView canon = ledger.canonical_view();
    bool anchored = false;
    uint64_t head = canon.head_height();
    uint64_t low = head >= anchor_window_ ? head - anchor_window_ : 0;
    for (uint64_t hh = low; hh <= head; ++hh) {
        if (canon.block_at(hh).hash == c.anchor_hash) {
            anchored = true;
            break;
        }
    }
    if (!anchored) return make_error(ErrorCode::StaleAnchor, "anchor not at canonical head");
    if (c.prev_digest != it->second)
        return make_error(ErrorCode::WrongPredecessor, "commit does not extend committed head");
    it->second = c.new_digest;
    return {};
}

std::optional<Digest> StateCommitValidator::committed_head(const std::string& contract) const {
    auto it = heads_.find(contract);
    if (it == heads_.end()) return std::nullopt;
    return it->second;
}

Result<uint64_t> state_commit(Simulation& sim, const std::string& contract, const Digest& prev,
                              const Digest& next, const Digest& anchor_hash) {
    StateCommitTx c{contract, prev, next, anchor_hash};
    return sim.ledger().submit_tx(kStateCommitTxKind, encode_state_commit(c));
}

}  // namespace forklab::mitigations
