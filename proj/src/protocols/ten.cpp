#include "forklab/protocols/ten.hpp"

#include "forklab/codec.hpp"

namespace forklab::protocols::ten {

namespace {

constexpr uint8_t kInputProvision = 0;
constexpr uint8_t kInputPropose = 1;

constexpr uint8_t kOutOk = 0;
constexpr uint8_t kOutRollup = 1;
constexpr uint8_t kOutThrottled = 2;
constexpr uint8_t kOutNotEnrolled = 3;

struct TenState {
    uint8_t enrolled = 0;
    Bytes master_seed;
    Digest l2_address{};
    uint64_t last_proposed_height = 0;
};

State encode_state(const TenState& s) {
    ByteWriter w;
    w.u8(s.enrolled).blob(s.master_seed).digest(s.l2_address).u64(s.last_proposed_height);
    return w.take();
}

TenState decode_ten_state(const State& b) {
    ByteReader r(b);
    TenState s;
    s.enrolled = r.u8();
    s.master_seed = r.blob();
    s.l2_address = r.digest();
    s.last_proposed_height = r.u64();
    return s;
}

Bytes rollup_signing_message(const TenRollup& r) {
    ByteWriter w;
    w.str("ten-rollup").digest(r.l1_block_header).digest(r.payload_hash);
    w.u64(r.aggregator_nonce).digest(r.aggregator_l2_address);
    if (r.aggregator_ephemeral_id) w.u64(*r.aggregator_ephemeral_id);
    return w.take();
}

}  // namespace

Bytes encode_rollup_header(const TenRollup& r) {
    ByteWriter w;
    w.digest(r.l1_block_header)
        .blob(r.cross_chain_messages)
        .digest(r.payload_hash)
        .blob(r.payload_hash_signature)
        .u64(r.batch_seq_num)
        .u64(r.aggregator_nonce)
        .digest(r.aggregator_l2_address);
    if (r.aggregator_ephemeral_id) w.u64(*r.aggregator_ephemeral_id);
    return w.take();
}

TenRollup decode_rollup_header(const Bytes& b, bool patched) {
    ByteReader r(b);
    TenRollup out;
    out.l1_block_header = r.digest();
    out.cross_chain_messages = r.blob();
    out.payload_hash = r.digest();
    out.payload_hash_signature = r.blob();
    out.batch_seq_num = r.u64();
    out.aggregator_nonce = r.u64();
    out.aggregator_l2_address = r.digest();
    if (patched) out.aggregator_ephemeral_id = r.u64();
    return out;
}

EnclaveProgram enclave_program(Variant variant) {
    EnclaveProgram p;
    p.name = variant == Variant::Patched ? "ten-enclave.ephemeral-id" : "ten-enclave";
    p.deterministic = false;
    p.uses_randomness = true;
    p.wants_ephemeral_keys = true;
    p.mutable_persistent_state = true;  // keys and rollup state live in the sealed DB
    p.quiet_steps = true;
    const bool patched = variant == Variant::Patched;
    p.init = [] { return encode_state(TenState{}); };
    p.step = [patched](const State& state, const Input& in, EnclaveContext& ctx) -> StepResult {
        TenState s = decode_ten_state(state);
        ByteReader r(in);
        uint8_t op = r.u8();
        ByteWriter out;
        if (op == kInputProvision) {
            s.master_seed = r.blob();
            s.l2_address = r.digest();
            s.enrolled = 1;
            out.u8(kOutOk);
            return {encode_state(s), out.take()};
        }
        if (op == kInputPropose) {
            if (!s.enrolled) {
                out.u8(kOutNotEnrolled);
                return {state, out.take()};
            }
            uint64_t head_height = r.u64();
            Digest head_hash = r.digest();
            uint64_t batch_seq = r.u64();
            // Throttling token: a single proposal per (instance, block).
            if (s.last_proposed_height == head_height) {
                out.u8(kOutThrottled);
                return {state, out.take()};
            }
            s.last_proposed_height = head_height;

            TenRollup rollup;
            rollup.l1_block_header = head_hash;
            rollup.cross_chain_messages = {};
            rollup.body = {};
            rollup.payload_hash = ctx.crypto().hash(rollup.body);
            rollup.batch_seq_num = batch_seq;
            rollup.aggregator_nonce = ctx.rng().next_u64();
            rollup.aggregator_l2_address = s.l2_address;
            if (patched) rollup.aggregator_ephemeral_id = ctx.ephemeral_keypair()->pk;
            KeyPair key = ctx.measurement_key();
            rollup.payload_hash_signature =
                ctx.crypto().sign(key.sk, rollup_signing_message(rollup));
            out.u8(kOutRollup).u8(patched ? 1 : 0).blob(encode_rollup_header(rollup));
            return {encode_state(s), out.take()};
        }
        out.u8(kOutNotEnrolled);
        return {state, out.take()};
    };
    return p;
}

void provision_ten(Simulation& sim, Handle h, const Bytes& master_seed, const Digest& l2_address) {
    ByteWriter w;
    w.u8(kInputProvision).blob(master_seed).digest(l2_address);
    sim.tee().step(h, w.take());
}

Result<TenRollup> ten_propose(Simulation& sim, Handle h, const Block& l1_head,
                              uint64_t batch_seq) {
    ByteWriter w;
    w.u8(kInputPropose).u64(l1_head.height).digest(l1_head.hash).u64(batch_seq);
    Output out = sim.tee().step(h, w.take());
    ByteReader r(out);
    uint8_t tag = r.u8();
    if (tag == kOutThrottled)
        return make_error(ErrorCode::ThrottleExceeded, "already proposed for this block");
    if (tag == kOutNotEnrolled)
        return make_error(ErrorCode::AttestationFailed, "instance not enrolled");
    bool patched = r.u8() != 0;
    Bytes header = r.blob();
    return decode_rollup_header(header, patched);
}

std::string aggregator_role(const Digest& l2_address) {
    return "ten-aggregator:" + short_hex(l2_address);
}

Result<void> TenRollupValidator::check(const Tx& tx, const Ledger& ledger) {
    TenRollup r;
    try {
        r = decode_rollup_header(tx.payload, variant_ == Variant::Patched);
    } catch (const ForklabError&) {
        return make_error(ErrorCode::ValidationFailed, "malformed rollup header");
    }
    ChainView canon = ledger.canonical_view();
    bool anchored = false;
    uint64_t head = canon.head_height();
    uint64_t low = head >= anchor_window_ ? head - anchor_window_ : 0;
    for (uint64_t h = low; h <= head; ++h) {
        if (canon.block_at(h).hash == r.l1_block_header) {
            anchored = true;
            break;
        }
    }
    if (!anchored)
        return make_error(ErrorCode::StaleAnchor, "rollup bound to a stale L1 block");
    if (!crypto_->verify(signer_pk_, rollup_signing_message(r), r.payload_hash_signature))
        return make_error(ErrorCode::BadSignature, "rollup signature rejected");
    if (variant_ == Variant::Patched) {
        auto active =
            registry_ ? registry_->active_key(aggregator_role(r.aggregator_l2_address))
                      : std::nullopt;
        if (!r.aggregator_ephemeral_id || !active || *active != *r.aggregator_ephemeral_id)
            return make_error(ErrorCode::UnregisteredEphemeralID,
                              "aggregator ephemeral id is not registered on L1");
    }
    return {};
}

Result<SettleResult> ten_settle(Simulation& sim, const std::vector<TenRollup>& rollups,
                                const Digest& current_head, Variant variant,
                                const mitigations::EphemeralIdRegistry* registry,
                                uint64_t expected_signer_pk) {
    std::optional<size_t> best;
    SettleResult res;
    for (size_t i = 0; i < rollups.size(); ++i) {
        const TenRollup& r = rollups[i];
        if (r.l1_block_header != current_head) {
            res.rejected.emplace_back(i, make_error(ErrorCode::StaleAnchor,
                                                    "rollup bound to a stale L1 block"));
            continue;
        }
        if (!sim.crypto().verify(expected_signer_pk, rollup_signing_message(r),
                                 r.payload_hash_signature)) {
            res.rejected.emplace_back(i, make_error(ErrorCode::BadSignature,
                                                    "rollup signature rejected"));
            continue;
        }
        if (variant == Variant::Patched) {
            auto active = registry ? registry->active_key(aggregator_role(r.aggregator_l2_address))
                                   : std::nullopt;
            if (!r.aggregator_ephemeral_id || !active || *active != *r.aggregator_ephemeral_id) {
                res.rejected.emplace_back(
                    i, make_error(ErrorCode::UnregisteredEphemeralID,
                                  "aggregator ephemeral id is not registered on L1"));
                continue;
            }
        }
        if (!best) {
            best = i;
        } else {
            const TenRollup& cur = rollups[*best];
            if (r.aggregator_nonce < cur.aggregator_nonce ||
                (r.aggregator_nonce == cur.aggregator_nonce &&
                 r.aggregator_l2_address < cur.aggregator_l2_address)) {
                best = i;
            }
        }
    }
    if (!best)
        return make_error(ErrorCode::ValidationFailed, "no valid rollup among submissions");
    res.accepted_index = *best;
    res.accepted = rollups[*best];
    (void)sim.ledger().submit_tx(kRollupTxKind, encode_rollup_header(res.accepted));
    sim.log().record("ten_settle", {{"accepted", ev_u64(res.accepted_index)},
                                    {"nonce", ev_u64(res.accepted.aggregator_nonce)},
                                    {"proposer", short_hex(res.accepted.aggregator_l2_address)}});
    return res;
}

}  // namespace forklab::protocols::ten
