#include "forklab/protocols/ccf.hpp"

#include <map>

#include "forklab/codec.hpp"

namespace forklab::protocols::ccf {

namespace {

constexpr uint8_t kInputPut = 0;
constexpr uint8_t kInputViewChange = 1;
constexpr uint8_t kInputConnect = 2;
constexpr uint8_t kInputGet = 3;

constexpr uint8_t kOutOk = 0;
constexpr uint8_t kOutMissing = 1;

struct KvsState {
    uint64_t view = 0;
    uint64_t primary_id = 0;
    uint64_t committed = 0;
    Digest log_digest{};
    std::map<std::string, std::string> entries;
};

State encode_state(const KvsState& s) {
    ByteWriter w;
    w.u64(s.view).u64(s.primary_id).u64(s.committed).digest(s.log_digest);
    w.u32(static_cast<uint32_t>(s.entries.size()));
    for (const auto& [k, v] : s.entries) w.str(k).str(v);
    return w.take();
}

KvsState decode_state(const State& b) {
    ByteReader r(b);
    KvsState s;
    s.view = r.u64();
    s.primary_id = r.u64();
    s.committed = r.u64();
    s.log_digest = r.digest();
    uint32_t n = r.u32();
    for (uint32_t i = 0; i < n; ++i) {
        std::string k = r.str();
        s.entries[k] = r.str();
    }
    return s;
}

}  // namespace

EnclaveProgram kvs_program() {
    EnclaveProgram p;
    p.name = "ccf-kvs";
    p.mutable_persistent_state = false;  // recovery is ledger replay, not sealing
    p.init = [] { return encode_state(KvsState{}); };
    p.step = [](const State& state, const Input& in, EnclaveContext& ctx) -> StepResult {
        KvsState s = decode_state(state);
        ByteReader r(in);
        uint8_t op = r.u8();
        ByteWriter out;
        switch (op) {
            case kInputPut: {
                std::string key = r.str();
                std::string value = r.str();
                s.entries[key] = value;
                s.committed++;
                ByteWriter lw;
                lw.digest(s.log_digest).str(key).str(value);
                s.log_digest = ctx.crypto().hash(lw.bytes());
                out.u8(kOutOk).str(value);
                return {encode_state(s), out.take()};
            }
            case kInputViewChange: {
                s.view++;
                s.primary_id = s.view;  // one leader per view
                out.u8(kOutOk).u64(s.view);
                return {encode_state(s), out.take()};
            }
            case kInputConnect: {
                out.u8(kOutOk).u64(s.view).u64(s.primary_id).u64(s.committed).digest(s.log_digest);
                return {state, out.take()};
            }
            case kInputGet: {
                std::string key = r.str();
                auto it = s.entries.find(key);
                if (it == s.entries.end()) {
                    out.u8(kOutMissing);
                } else {
                    out.u8(kOutOk).str(it->second);
                }
                return {state, out.take()};
            }
        }
        out.u8(kOutMissing);
        return {state, out.take()};
    };
    return p;
}

Bytes encode_put(const std::string& key, const std::string& value) {
    ByteWriter w;
    w.u8(kInputPut).str(key).str(value);
    return w.take();
}

mitigations::TxMapper replay_mapper() {
    return [](const Tx& tx) -> std::optional<Input> {
        if (tx.kind == kPutTxKind) {
            Bytes in;
            in.push_back(kInputPut);
            append(in, tx.payload);
            return in;
        }
        if (tx.kind == kViewChangeTxKind) {
            Bytes in;
            in.push_back(kInputViewChange);
            return in;
        }
        return std::nullopt;
    };
}

Result<CcfView> ccf_connect(Simulation& sim, Handle h, uint64_t client_cached_view) {
    ByteWriter w;
    w.u8(kInputConnect);
    Output out = sim.tee().step(h, w.take());
    ByteReader r(out);
    r.u8();
    CcfView v;
    v.view = r.u64();
    v.primary_id = r.u64();
    v.committed = r.u64();
    v.log_digest = r.digest();
    if (v.view < client_cached_view) {
        return make_error(ErrorCode::Aborted, "view mismatch: instance at " +
                                                  std::to_string(v.view) + ", client knows " +
                                                  std::to_string(client_cached_view));
    }
    return v;
}

Result<std::string> ccf_submit(Simulation& sim, Handle h, const std::string& key,
                               const std::string& value) {
    ByteWriter w;
    w.str(key).str(value);
    auto receipt = sim.ledger().submit_tx(kPutTxKind, w.take());
    if (!receipt.ok()) return receipt.error();
    Bytes in;
    in.push_back(kInputPut);
    ByteWriter pw;
    pw.str(key).str(value);
    append(in, pw.bytes());
    Output out = sim.tee().step(h, in);
    ByteReader r(out);
    r.u8();
    return r.str();
}

Result<std::string> ccf_get(Simulation& sim, Handle h, const std::string& key) {
    ByteWriter w;
    w.u8(kInputGet).str(key);
    Output out = sim.tee().step(h, w.take());
    ByteReader r(out);
    if (r.u8() != kOutOk) return make_error(ErrorCode::ProgramFault, "missing key: " + key);
    return r.str();
}

Result<void> ccf_view_change(Simulation& sim, Handle h) {
    auto receipt = sim.ledger().submit_tx(kViewChangeTxKind, Bytes{});
    if (!receipt.ok()) return receipt.error();
    ByteWriter w;
    w.u8(kInputViewChange);
    sim.tee().step(h, w.take());
    return {};
}

}  // namespace forklab::protocols::ccf
