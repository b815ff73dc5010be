#include "forklab/protocols/phala.hpp"

#include "forklab/codec.hpp"

namespace forklab::protocols::phala {

namespace {

constexpr uint8_t kInputProvision = 0;
constexpr uint8_t kInputBlock = 1;
constexpr uint8_t kInputQuery = 2;

constexpr uint8_t kOutProvisioned = 0;
constexpr uint8_t kOutBlockDone = 1;
constexpr uint8_t kOutReply = 2;
constexpr uint8_t kOutDecryptFail = 3;
constexpr uint8_t kOutBadSignature = 4;

constexpr size_t kIvLen = 12;
constexpr size_t kSigLen = 32;

struct WorkerState {
    uint8_t provisioned = 0;
    uint64_t identity_sk = 0;
    uint64_t identity_pk = 0;
    uint64_t session_id = 0;
    Digest contract_address{};
    uint64_t contract_sk = 0;
    uint8_t flip = 0;
    uint64_t last_height = 0;
    Digest last_hash{};
};

State encode_state(const WorkerState& s) {
    ByteWriter w;
    w.u8(s.provisioned)
        .u64(s.identity_sk)
        .u64(s.identity_pk)
        .u64(s.session_id)
        .digest(s.contract_address)
        .u64(s.contract_sk)
        .u8(s.flip)
        .u64(s.last_height)
        .digest(s.last_hash);
    return w.take();
}

WorkerState decode_worker_state(const State& b) {
    ByteReader r(b);
    WorkerState s;
    s.provisioned = r.u8();
    s.identity_sk = r.u64();
    s.identity_pk = r.u64();
    s.session_id = r.u64();
    s.contract_address = r.digest();
    s.contract_sk = r.u64();
    s.flip = r.u8();
    s.last_height = r.u64();
    s.last_hash = r.digest();
    return s;
}

}  // namespace

bool heartbeat_eligible(const CryptoProvider& crypto, uint64_t worker_pk, const Digest& block_hash,
                        uint64_t total_workers, uint64_t expected_per_block) {
    if (total_workers == 0) return false;
    if (expected_per_block >= total_workers) return true;
    ByteWriter w;
    w.str("phala-eligibility").u64(worker_pk).digest(block_hash);
    Digest d = crypto.hash(w.bytes());
    uint64_t draw = 0;
    for (int i = 0; i < 8; ++i) draw = (draw << 8) | d[i];
    // Threshold = expected/total of the u64 range, without overflow.
    long double p = static_cast<long double>(expected_per_block) / total_workers;
    auto limit = static_cast<uint64_t>(p * static_cast<long double>(UINT64_MAX));
    return draw < limit;
}

Bytes heartbeat_message(const PhalaHeartbeat& hb) {
    ByteWriter w;
    w.u64(hb.session_id)
        .u64(hb.challenge_block)
        .u64(hb.challenge_time)
        .u64(hb.iterations)
        .u32(hb.n_clusters)
        .u32(hb.n_contracts);
    return w.take();
}

Bytes encode_heartbeat(const PhalaHeartbeat& hb) {
    Bytes out = heartbeat_message(hb);
    append(out, hb.signature);
    return out;
}

PhalaHeartbeat decode_heartbeat(const Bytes& b) {
    ByteReader r(b);
    PhalaHeartbeat hb;
    hb.session_id = r.u64();
    hb.challenge_block = r.u64();
    hb.challenge_time = r.u64();
    hb.iterations = r.u64();
    hb.n_clusters = r.u32();
    hb.n_contracts = r.u32();
    hb.signature = r.raw(kSigLen);
    return hb;
}

EnclaveProgram worker_program(const WorkerParams& params, Variant variant) {
    EnclaveProgram p;
    p.name = variant == Variant::Patched ? "phala-worker.timestamped" : "phala-worker";
    p.deterministic = false;
    p.uses_randomness = true;
    p.mutable_persistent_state = true;  // contract state checkpoints to disk
    p.quiet_steps = true;
    {
        ByteWriter w;
        w.u64(params.total_workers).u64(params.expected_per_block);
        p.params = w.take();
    }
    const uint64_t total = params.total_workers;
    const uint64_t expected = params.expected_per_block;
    const bool patched = variant == Variant::Patched;
    p.init = [] { return encode_state(WorkerState{}); };
    p.step = [total, expected, patched](const State& state, const Input& in,
                                        EnclaveContext& ctx) -> StepResult {
        WorkerState s = decode_worker_state(state);
        ByteReader r(in);
        uint8_t op = r.u8();
        ByteWriter out;
        switch (op) {
            case kInputProvision: {
                s.contract_address = r.digest();
                s.contract_sk = r.u64();
                KeyPair identity = ctx.crypto_mut().keygen(ctx.rng());
                s.identity_sk = identity.sk;
                s.identity_pk = identity.pk;
                s.session_id = ctx.rng().next_u64();
                s.provisioned = 1;
                out.u8(kOutProvisioned).u64(s.identity_pk).u64(s.session_id);
                return {encode_state(s), out.take()};
            }
            case kInputBlock: {
                uint64_t height = r.u64();
                Digest hash = r.digest();
                uint64_t timestamp = r.u64();
                uint32_t toggles = r.u32();
                for (uint32_t i = 0; i < toggles; ++i) s.flip = s.flip ? 0 : 1;
                s.last_height = height;
                s.last_hash = hash;
                out.u8(kOutBlockDone);
                if (s.provisioned &&
                    heartbeat_eligible(ctx.crypto(), s.identity_pk, hash, total, expected)) {
                    PhalaHeartbeat hb;
                    hb.session_id = s.session_id;
                    hb.challenge_block = height;
                    hb.challenge_time = timestamp;
                    hb.iterations = 1000000;
                    hb.n_clusters = 1;
                    hb.n_contracts = 1;
                    hb.signature = ctx.crypto().sign(s.identity_sk, heartbeat_message(hb));
                    out.u8(1);
                    // Tx payload: worker pk then the heartbeat itself.
                    ByteWriter tw;
                    tw.u64(s.identity_pk).raw(encode_heartbeat(hb));
                    out.blob(tw.bytes());
                } else {
                    out.u8(0);
                }
                return {encode_state(s), out.take()};
            }
            case kInputQuery: {
                Bytes query = r.rest();
                if (query.size() < kIvLen + 8 + 8 + kSigLen) {
                    out.u8(kOutDecryptFail);
                    return {state, out.take()};
                }
                // query = payload || clientIdentityPubKey(8) || sig(32)
                size_t payload_len = query.size() - 8 - kSigLen;
                Bytes payload(query.begin(), query.begin() + payload_len);
                ByteReader tail(std::span<const uint8_t>(query.data() + payload_len, 8 + kSigLen));
                uint64_t client_identity_pk = tail.u64();
                Bytes sig = tail.raw(kSigLen);
                if (!ctx.crypto().verify(client_identity_pk, payload, sig)) {
                    out.u8(kOutBadSignature);
                    return {state, out.take()};
                }
                // payload = iv(12) || clientPubKey(8) || ciphertext
                ByteReader pr(payload);
                Bytes iv = pr.raw(kIvLen);
                uint64_t client_pk = pr.u64();
                Bytes ct = pr.rest();
                Digest k = ctx.crypto().agree(s.contract_sk, client_pk);
                auto plain = ctx.crypto().aead_decrypt(k, iv, ct);
                if (!plain.ok()) {
                    out.u8(kOutDecryptFail);
                    return {state, out.take()};
                }
                ByteReader qr(plain.value());
                Digest address = qr.digest();
                uint64_t nonce = qr.u64();
                Bytes raw_query = qr.rest();
                (void)raw_query;  // single-method contract: read the flip bit
                if (address != s.contract_address) {
                    out.u8(kOutDecryptFail);
                    return {state, out.take()};
                }
                ByteWriter reply;
                reply.u8(s.flip).u64(nonce);
                out.u8(kOutReply);
                if (patched) {
                    auto ts = mitigations::timestamp_response(ctx.crypto(), s.contract_sk,
                                                              reply.take(), s.last_height,
                                                              std::nullopt);
                    out.blob(mitigations::encode_timestamped_response(ts));
                } else {
                    out.blob(reply.bytes());
                }
                return {state, out.take()};
            }
        }
        out.u8(kOutDecryptFail);
        return {state, out.take()};
    };
    return p;
}

ProvisionResult provision_worker(Simulation& sim, Handle h, const Digest& contract_address,
                                 uint64_t contract_sk) {
    ByteWriter w;
    w.u8(kInputProvision).digest(contract_address).u64(contract_sk);
    Output out = sim.tee().step(h, w.take());
    ByteReader r(out);
    if (r.u8() != kOutProvisioned)
        throw ForklabError(ErrorCode::ProgramFault, "worker provision failed");
    ProvisionResult res;
    res.identity_pk = r.u64();
    res.session_id = r.u64();
    return res;
}

BlockOutcome feed_block(Simulation& sim, Handle h, const Block& block, uint32_t toggle_count) {
    ByteWriter w;
    w.u8(kInputBlock).u64(block.height).digest(block.hash).u64(block.timestamp).u32(toggle_count);
    Output out = sim.tee().step(h, w.take());
    ByteReader r(out);
    if (r.u8() != kOutBlockDone)
        throw ForklabError(ErrorCode::ProgramFault, "worker rejected block");
    BlockOutcome res;
    if (r.u8() != 0) res.heartbeat = r.blob();
    return res;
}

BuiltQuery build_query(ToyCrypto& crypto, RngStream& client_rng, const QueryContext& qc,
                       const Bytes& raw_query) {
    BuiltQuery q;
    q.ephemeral = crypto.keygen(client_rng);
    q.nonce = client_rng.next_u64();
    Bytes iv = crypto.random_bytes(client_rng, kIvLen);
    Digest k = crypto.agree(q.ephemeral.sk, qc.contract_pk);
    ByteWriter plain;
    plain.digest(qc.contract_address).u64(q.nonce).raw(raw_query);
    ByteWriter payload;
    payload.raw(iv).u64(q.ephemeral.pk).raw(crypto.aead_encrypt(k, iv, plain.bytes()));
    Bytes sig = crypto.sign(qc.client_identity.sk, payload.bytes());
    ByteWriter query;
    query.raw(payload.bytes()).u64(qc.client_identity.pk).raw(sig);
    q.query = query.take();
    return q;
}

Result<Output> deliver_query(Simulation& sim, Handle worker, const Bytes& query) {
    ByteWriter w;
    w.u8(kInputQuery).raw(query);
    Output out = sim.deliver(worker, w.take());
    ByteReader r(out);
    uint8_t tag = r.u8();
    if (tag == kOutBadSignature)
        return make_error(ErrorCode::BadSignature, "query signature rejected");
    if (tag != kOutReply) return make_error(ErrorCode::DecryptFail, "query not decryptable");
    return r.blob();
}

Result<QueryReply> parse_reply_vulnerable(const Output& reply) {
    ByteReader r(reply);
    QueryReply q;
    q.result = r.u8();
    q.nonce = r.u64();
    return q;
}

Result<QueryReply> parse_reply_patched(const CryptoProvider& crypto, const Output& reply,
                                       uint64_t contract_pk, const ChainView& client_view,
                                       uint64_t freshness_window) {
    auto ts = mitigations::decode_timestamped_response(reply);
    auto verdict = mitigations::client_verify(crypto, ts, contract_pk, client_view,
                                              mitigations::TimestampVariant::PlainHeight,
                                              freshness_window);
    if (verdict == mitigations::VerifyVerdict::RejectStale)
        return make_error(ErrorCode::RejectStale,
                          "response height " + std::to_string(ts.height) + " behind client head " +
                              std::to_string(client_view.head_height()));
    if (verdict == mitigations::VerifyVerdict::BadSignature)
        return make_error(ErrorCode::BadSignature, "response signature rejected");
    if (verdict != mitigations::VerifyVerdict::Accept)
        return make_error(ErrorCode::RejectForkMismatch, "response not on client's chain");
    ByteReader r(ts.payload);
    QueryReply q;
    q.result = r.u8();
    q.nonce = r.u64();
    q.height = ts.height;
    return q;
}

void Gatekeeper::observe_block(const Block& block) {
    for (const Tx& tx : block.txs) {
        if (tx.kind != kHeartbeatTxKind) continue;
        ByteReader r(tx.payload);
        uint64_t worker_pk = r.u64();
        PhalaHeartbeat hb = decode_heartbeat(r.rest());
        if (!crypto_->verify(worker_pk, heartbeat_message(hb), hb.signature)) continue;
        uint64_t& last = last_seen_.try_emplace(worker_pk, 0).first->second;
        last = std::max(last, hb.challenge_block);
    }
}

std::vector<uint64_t> Gatekeeper::missing_heartbeats(uint64_t current_height,
                                                     uint64_t expected_period_blocks) const {
    std::vector<uint64_t> missing;
    for (const auto& [pk, last] : last_seen_) {
        if (last + 2 * expected_period_blocks < current_height) missing.push_back(pk);
    }
    return missing;
}

std::optional<uint64_t> Gatekeeper::last_heartbeat_height(uint64_t worker_pk) const {
    auto it = last_seen_.find(worker_pk);
    if (it == last_seen_.end()) return std::nullopt;
    return it->second;
}

HeartbeatStats measure_heartbeat_rate(uint64_t seed, uint64_t workers, uint64_t blocks,
                                      uint64_t block_interval_ms, uint64_t expected_per_block) {
    Simulation sim(seed, FinalMode{block_interval_ms});
    PlatformId platform = sim.tee().add_platform();
    WorkerParams params{workers, expected_per_block};
    Measurement m = sim.tee().register_program(worker_program(params, Variant::Vulnerable));

    RngStream setup = sim.make_stream("phala-calibration");
    SharedNetworkSecret secret = SharedNetworkSecret::generate(setup);
    Digest contract_address = sim.crypto().hash(to_bytes("calibration-contract"));
    KeyPair contract_key = secret.contract_keypair(sim.crypto(), contract_address);

    std::vector<Handle> hs;
    hs.reserve(workers);
    for (uint64_t i = 0; i < workers; ++i) {
        Handle h = sim.tee().launch(platform, m);
        provision_worker(sim, h, contract_address, contract_key.sk);
        hs.push_back(h);
    }

    HeartbeatStats stats;
    stats.blocks = blocks;
    std::vector<uint64_t> first_worker_beats;
    for (uint64_t b = 0; b < blocks; ++b) {
        sim.advance_time(block_interval_ms);
        const Block& head = sim.ledger().block(sim.ledger().canonical_head());
        uint64_t count = 0;
        for (size_t i = 0; i < hs.size(); ++i) {
            BlockOutcome o = feed_block(sim, hs[i], head, 0);
            if (o.heartbeat) {
                ++count;
                if (i == 0) first_worker_beats.push_back(head.height);
            }
        }
        stats.total_heartbeats += count;
        sim.log().record("heartbeat_count",
                         {{"height", ev_u64(head.height)}, {"count", ev_u64(count)}});
    }
    stats.mean_per_block = static_cast<double>(stats.total_heartbeats) / blocks;
    if (stats.total_heartbeats > 0) {
        stats.pooled_mean_gap_ms = static_cast<double>(blocks) * workers /
                                   stats.total_heartbeats * block_interval_ms;
    }
    if (first_worker_beats.size() >= 2) {
        double gaps = 0;
        for (size_t i = 1; i < first_worker_beats.size(); ++i) {
            gaps += static_cast<double>(first_worker_beats[i] - first_worker_beats[i - 1]);
        }
        stats.single_worker_mean_gap_ms =
            gaps / (first_worker_beats.size() - 1) * block_interval_ms;
    }
    return stats;
}

}  // namespace forklab::protocols::phala
