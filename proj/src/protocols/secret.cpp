#include "forklab/protocols/secret.hpp"

#include <map>

#include "forklab/codec.hpp"

namespace forklab::protocols::secret {

namespace {

constexpr uint8_t kInputProvision = 0;
constexpr uint8_t kInputBlock = 1;
constexpr uint8_t kInputQuery = 2;

constexpr uint8_t kOutOk = 0;
constexpr uint8_t kOutReply = 1;
constexpr uint8_t kOutDecryptFail = 2;
constexpr uint8_t kOutAddressMismatch = 3;
constexpr uint8_t kOutBrokenChain = 4;
constexpr uint8_t kOutUnknownContract = 5;

struct ContractSlot {
    Digest code_hash{};
    int64_t count = 0;
};

struct NodeState {
    uint8_t provisioned = 0;
    uint64_t io_sk = 0;
    uint64_t last_height = 0;
    Digest last_hash{};
    std::map<Digest, ContractSlot> contracts;
};

State encode_state(const NodeState& s) {
    ByteWriter w;
    w.u8(s.provisioned).u64(s.io_sk).u64(s.last_height).digest(s.last_hash);
    w.u32(static_cast<uint32_t>(s.contracts.size()));
    for (const auto& [addr, slot] : s.contracts) {
        w.digest(addr).digest(slot.code_hash).i64(slot.count);
    }
    return w.take();
}

NodeState decode_node_state(const State& b) {
    ByteReader r(b);
    NodeState s;
    s.provisioned = r.u8();
    s.io_sk = r.u64();
    s.last_height = r.u64();
    s.last_hash = r.digest();
    uint32_t n = r.u32();
    for (uint32_t i = 0; i < n; ++i) {
        Digest addr = r.digest();
        ContractSlot slot;
        slot.code_hash = r.digest();
        slot.count = r.i64();
        s.contracts.emplace(addr, slot);
    }
    return s;
}

Bytes query_iv(uint64_t nonce) {
    ByteWriter w;
    w.u64(nonce).u8(0);
    return w.take();
}

Bytes reply_iv(uint64_t nonce) {
    ByteWriter w;
    w.u64(nonce).u8(1);
    return w.take();
}

Bytes encode_block_input(const Block& b) {
    ByteWriter w;
    w.u8(kInputBlock).u64(b.height).digest(b.hash).digest(b.parent_hash).u64(b.proposer);
    w.u32(static_cast<uint32_t>(b.txs.size()));
    for (const Tx& tx : b.txs) w.str(tx.kind).blob(tx.payload).u64(tx.id);
    return w.take();
}

void apply_tx(NodeState& s, const std::string& kind, const Bytes& payload) {
    if (kind == kInstantiateTxKind) {
        ByteReader r(payload);
        Digest address = r.digest();
        ContractSlot slot;
        slot.code_hash = r.digest();
        slot.count = r.i64();
        s.contracts.emplace(address, slot);
    } else if (kind == kIncrementTxKind) {
        ByteReader r(payload);
        Digest address = r.digest();
        auto it = s.contracts.find(address);
        if (it != s.contracts.end()) it->second.count += 1;
    }
}

}  // namespace

EnclaveProgram node_program(Variant variant) {
    EnclaveProgram p;
    p.name = variant == Variant::Patched ? "sn-node.bound-queries" : "sn-node";
    p.mutable_persistent_state = true;  // consensus seed and contract state are sealed
    p.quiet_steps = true;
    const bool patched = variant == Variant::Patched;
    p.init = [] { return encode_state(NodeState{}); };
    p.step = [patched](const State& state, const Input& in, EnclaveContext& ctx) -> StepResult {
        NodeState s = decode_node_state(state);
        ByteReader r(in);
        uint8_t op = r.u8();
        ByteWriter out;
        switch (op) {
            case kInputProvision: {
                s.io_sk = r.u64();
                s.provisioned = 1;
                out.u8(kOutOk);
                return {encode_state(s), out.take()};
            }
            case kInputBlock: {
                uint64_t height = r.u64();
                Digest hash = r.digest();
                Digest parent = r.digest();
                uint64_t proposer = r.u64();
                uint32_t n = r.u32();
                std::vector<Tx> txs;
                for (uint32_t i = 0; i < n; ++i) {
                    Tx tx;
                    tx.kind = r.str();
                    tx.payload = r.blob();
                    tx.id = r.u64();
                    txs.push_back(std::move(tx));
                }
                if (patched) {
                    // Proof-of-publication analogue: the block must extend
                    // the chain this enclave has already validated.
                    bool links = s.last_height == 0 || parent == s.last_hash;
                    if (block_content_hash(parent, height, txs, proposer) != hash ||
                        height != s.last_height + 1 || !links) {
                        out.u8(kOutBrokenChain);
                        return {state, out.take()};
                    }
                }
                for (const Tx& tx : txs) apply_tx(s, tx.kind, tx.payload);
                s.last_height = height;
                s.last_hash = hash;
                out.u8(kOutOk);
                return {encode_state(s), out.take()};
            }
            case kInputQuery: {
                Bytes query = r.rest();
                ByteReader qr(query);
                Digest outer_address = qr.digest();
                uint64_t nonce = qr.u64();
                uint64_t client_pk = qr.u64();
                Bytes ct = qr.rest();

                auto slot = s.contracts.find(outer_address);
                if (slot == s.contracts.end()) {
                    out.u8(kOutUnknownContract);
                    return {state, out.take()};
                }
                Digest k1 = ctx.crypto().agree(s.io_sk, client_pk);
                ByteWriter nw;
                nw.u64(nonce);
                Digest k = ctx.crypto().kdf(nw.bytes(), std::span<const uint8_t>(k1.data(), 32));
                auto plain = ctx.crypto().aead_decrypt(k, query_iv(nonce), ct);
                if (!plain.ok()) {
                    out.u8(kOutDecryptFail);
                    return {state, out.take()};
                }
                ByteReader pr(plain.value());
                Digest code_hash = pr.digest();
                if (code_hash != slot->second.code_hash) {
                    // Rogue-code protection: the query names the code it
                    // expects to run.
                    out.u8(kOutDecryptFail);
                    return {state, out.take()};
                }
                if (patched) {
                    Digest intended = pr.digest();
                    if (intended != outer_address) {
                        out.u8(kOutAddressMismatch);
                        return {state, out.take()};
                    }
                }
                Bytes raw_query = pr.rest();
                (void)raw_query;  // single-method contract: get_count
                ByteWriter result;
                result.i64(slot->second.count);
                Bytes reply_ct = ctx.crypto().aead_encrypt(k, reply_iv(nonce), result.bytes());
                out.u8(kOutReply);
                if (patched) {
                    auto ts = mitigations::timestamp_response(ctx.crypto(), s.io_sk, reply_ct,
                                                              s.last_height, std::nullopt);
                    out.blob(mitigations::encode_timestamped_response(ts));
                } else {
                    out.blob(reply_ct);
                }
                return {state, out.take()};
            }
        }
        out.u8(kOutDecryptFail);
        return {state, out.take()};
    };
    return p;
}

void provision_node(Simulation& sim, Handle h, uint64_t consensus_io_sk) {
    ByteWriter w;
    w.u8(kInputProvision).u64(consensus_io_sk);
    sim.tee().step(h, w.take());
}

Bytes encode_instantiate(const Digest& address, const Digest& code_hash, int64_t init) {
    ByteWriter w;
    w.digest(address).digest(code_hash).i64(init);
    return w.take();
}

Bytes encode_increment(const Digest& address) {
    ByteWriter w;
    w.digest(address);
    return w.take();
}

Result<void> feed_block(Simulation& sim, Handle h, const Block& block) {
    Output out = sim.tee().step(h, encode_block_input(block));
    ByteReader r(out);
    if (r.u8() == kOutBrokenChain)
        return make_error(ErrorCode::BrokenChain, "block does not extend validated chain");
    return {};
}

BuiltQuery build_query(ToyCrypto& crypto, RngStream& client_rng, uint64_t consensus_io_pk,
                       const Digest& contract_address, const Digest& code_hash,
                       const Bytes& raw_query, Variant variant) {
    BuiltQuery q;
    q.ephemeral = crypto.keygen(client_rng);
    q.nonce = client_rng.next_u64();
    Digest k = derive_query_key(crypto, q.nonce, q.ephemeral.sk, consensus_io_pk);
    ByteWriter plain;
    plain.digest(code_hash);
    if (variant == Variant::Patched) plain.digest(contract_address);
    plain.raw(raw_query);
    ByteWriter w;
    w.digest(contract_address).u64(q.nonce).u64(q.ephemeral.pk);
    w.raw(crypto.aead_encrypt(k, query_iv(q.nonce), plain.bytes()));
    q.query = w.take();
    return q;
}

Digest derive_query_key(const CryptoProvider& crypto, uint64_t nonce, uint64_t own_sk,
                        uint64_t peer_pk) {
    Digest k1 = crypto.agree(own_sk, peer_pk);
    ByteWriter nw;
    nw.u64(nonce);
    return crypto.kdf(nw.bytes(), std::span<const uint8_t>(k1.data(), 32));
}

Bytes rewrite_address(const Bytes& query, const Digest& new_address) {
    Bytes out = query;
    for (size_t i = 0; i < 32 && i < out.size(); ++i) out[i] = new_address[i];
    return out;
}

Result<Output> deliver_query(Simulation& sim, Handle node, const Bytes& query) {
    ByteWriter w;
    w.u8(kInputQuery).raw(query);
    Output out = sim.deliver(node, w.take());
    ByteReader r(out);
    uint8_t tag = r.u8();
    if (tag == kOutReply) return r.blob();
    if (tag == kOutAddressMismatch)
        return make_error(ErrorCode::AddressMismatch,
                          "intended contract address does not match handling contract");
    if (tag == kOutUnknownContract)
        return make_error(ErrorCode::DecryptFail, "no contract at address");
    return make_error(ErrorCode::DecryptFail, "query not decryptable");
}

namespace {

Result<QueryAnswer> open_counter(const CryptoProvider& crypto, const Bytes& reply_ct,
                                 const Digest& key, uint64_t nonce) {
    auto plain = crypto.aead_decrypt(key, reply_iv(nonce), reply_ct);
    if (!plain.ok()) return make_error(ErrorCode::DecryptFail, "reply not decryptable");
    ByteReader r(plain.value());
    QueryAnswer a;
    a.count = r.i64();
    return a;
}

}  // namespace

Result<QueryAnswer> open_reply_vulnerable(const CryptoProvider& crypto, const Output& reply,
                                          const Digest& key, uint64_t nonce) {
    return open_counter(crypto, reply, key, nonce);
}

Result<QueryAnswer> open_reply_patched(const CryptoProvider& crypto, const Output& reply,
                                       const Digest& key, uint64_t nonce, uint64_t io_pk,
                                       const ChainView& client_view, uint64_t freshness_window) {
    auto ts = mitigations::decode_timestamped_response(reply);
    auto verdict = mitigations::client_verify(crypto, ts, io_pk, client_view,
                                              mitigations::TimestampVariant::PlainHeight,
                                              freshness_window);
    if (verdict == mitigations::VerifyVerdict::RejectStale)
        return make_error(ErrorCode::RejectStale, "stale response height " +
                                                      std::to_string(ts.height));
    if (verdict != mitigations::VerifyVerdict::Accept)
        return make_error(ErrorCode::BadSignature, "response verification failed");
    auto inner = open_counter(crypto, ts.payload, key, nonce);
    if (!inner.ok()) return inner.error();
    QueryAnswer a = inner.value();
    a.height = ts.height;
    return a;
}

}  // namespace forklab::protocols::secret
