#include "forklab/protocols/bite.hpp"

#include <map>

#include "forklab/codec.hpp"

namespace forklab::protocols::bite {

namespace {

constexpr uint8_t kInputBlock = 0;
constexpr uint8_t kInputBalance = 1;

constexpr uint8_t kOutOk = 0;
constexpr uint8_t kOutReply = 1;

struct ScannerState {
    uint64_t last_height = 0;
    Digest last_hash{};
    std::map<uint64_t, int64_t> balances;
};

State encode_state(const ScannerState& s) {
    ByteWriter w;
    w.u64(s.last_height).digest(s.last_hash);
    w.u32(static_cast<uint32_t>(s.balances.size()));
    for (const auto& [acct, bal] : s.balances) w.u64(acct).i64(bal);
    return w.take();
}

ScannerState decode_scanner_state(const State& b) {
    ByteReader r(b);
    ScannerState s;
    s.last_height = r.u64();
    s.last_hash = r.digest();
    uint32_t n = r.u32();
    for (uint32_t i = 0; i < n; ++i) {
        uint64_t acct = r.u64();
        s.balances[acct] = r.i64();
    }
    return s;
}

}  // namespace

EnclaveProgram scanner_program(Variant variant) {
    EnclaveProgram p;
    p.name = variant == Variant::Patched ? "bite-scanner.height-and-hash" : "bite-scanner";
    p.mutable_persistent_state = true;
    p.quiet_steps = true;
    const bool patched = variant == Variant::Patched;
    p.init = [] { return encode_state(ScannerState{}); };
    p.step = [patched](const State& state, const Input& in, EnclaveContext& ctx) -> StepResult {
        ScannerState s = decode_scanner_state(state);
        ByteReader r(in);
        uint8_t op = r.u8();
        ByteWriter out;
        if (op == kInputBlock) {
            s.last_height = r.u64();
            s.last_hash = r.digest();
            uint32_t n = r.u32();
            for (uint32_t i = 0; i < n; ++i) {
                uint64_t acct = r.u64();
                int64_t amount = r.i64();
                s.balances[acct] += amount;
            }
            out.u8(kOutOk);
            return {encode_state(s), out.take()};
        }
        if (op == kInputBalance) {
            uint64_t acct = r.u64();
            auto it = s.balances.find(acct);
            int64_t bal = it == s.balances.end() ? 0 : it->second;
            ByteWriter reply;
            reply.i64(bal);
            out.u8(kOutReply);
            if (patched) {
                KeyPair key = ctx.measurement_key();
                auto ts = mitigations::timestamp_response(ctx.crypto(), key.sk, reply.take(),
                                                          s.last_height, s.last_hash);
                out.blob(mitigations::encode_timestamped_response(ts));
            } else {
                out.blob(reply.bytes());
            }
            return {state, out.take()};
        }
        out.u8(kOutOk);
        return {state, out.take()};
    };
    return p;
}

Bytes encode_pay(uint64_t account, int64_t amount) {
    ByteWriter w;
    w.u64(account).i64(amount);
    return w.take();
}

Result<void> feed_block(Simulation& sim, Handle h, const Block& block) {
    ByteWriter w;
    w.u8(kInputBlock).u64(block.height).digest(block.hash);
    std::vector<std::pair<uint64_t, int64_t>> pays;
    for (const Tx& tx : block.txs) {
        if (tx.kind != kPayTxKind) continue;
        ByteReader r(tx.payload);
        uint64_t acct = r.u64();
        int64_t amount = r.i64();
        pays.emplace_back(acct, amount);
    }
    w.u32(static_cast<uint32_t>(pays.size()));
    for (const auto& [acct, amount] : pays) w.u64(acct).i64(amount);
    sim.tee().step(h, w.take());
    return {};
}

Result<Output> bite_balance_query(Simulation& sim, Handle h, uint64_t account) {
    ByteWriter w;
    w.u8(kInputBalance).u64(account);
    Output out = sim.deliver(h, w.take());
    ByteReader r(out);
    if (r.u8() != kOutReply) return make_error(ErrorCode::ProgramFault, "no balance reply");
    return r.blob();
}

BalanceReply parse_balance_vulnerable(const Output& out) {
    ByteReader r(out);
    BalanceReply b;
    b.balance = r.i64();
    return b;
}

Result<BalanceReply> parse_balance_patched(const CryptoProvider& crypto, const Output& out,
                                           uint64_t enclave_pk, const ChainView& client_view,
                                           uint64_t freshness_window) {
    auto ts = mitigations::decode_timestamped_response(out);
    auto verdict = mitigations::client_verify(crypto, ts, enclave_pk, client_view,
                                              mitigations::TimestampVariant::HeightAndHash,
                                              freshness_window);
    if (verdict == mitigations::VerifyVerdict::RejectStale)
        return make_error(ErrorCode::RejectStale, "balance response is stale");
    if (verdict == mitigations::VerifyVerdict::RejectForkMismatch)
        return make_error(ErrorCode::RejectForkMismatch,
                          "balance computed on a branch the client does not see");
    if (verdict != mitigations::VerifyVerdict::Accept)
        return make_error(ErrorCode::BadSignature, "balance response signature rejected");
    ByteReader r(ts.payload);
    BalanceReply b;
    b.balance = r.i64();
    b.height = ts.height;
    b.block_hash = ts.block_hash;
    return b;
}

uint64_t scanner_signer_pk(Simulation& sim, Handle h) {
    return sim.tee().measurement_key(sim.tee().inspect(h).measurement).pk;
}

}  // namespace forklab::protocols::bite
