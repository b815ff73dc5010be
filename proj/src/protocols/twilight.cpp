#include "forklab/protocols/twilight.hpp"

#include "forklab/codec.hpp"

namespace forklab::protocols::twilight {

namespace {

constexpr uint8_t kInputPay = 0;
constexpr uint8_t kInputClaim = 1;
constexpr uint8_t kOutCiphertext = 0;
constexpr uint8_t kOutAmount = 1;
constexpr uint8_t kOutDecryptFail = 2;

}  // namespace

EnclaveProgram relay_program() {
    EnclaveProgram p;
    p.name = "twilight-relay";
    p.deterministic = false;
    p.uses_randomness = true;
    p.wants_ephemeral_keys = true;
    p.mutable_persistent_state = false;
    p.init = [] { return State{}; };
    p.step = [](const State& s, const Input& in, EnclaveContext& ctx) -> StepResult {
        ByteReader r(in);
        uint8_t op = r.u8();
        ByteWriter out;
        const KeyPair& own = *ctx.ephemeral_keypair();
        if (op == kInputPay) {
            uint64_t recipient_pk = r.u64();
            uint64_t amount = r.u64();
            Digest k = ctx.crypto().agree(own.sk, recipient_pk);
            Bytes iv = ctx.crypto().random_bytes(ctx.rng(), 12);
            ByteWriter plain;
            plain.u64(amount);
            // Message: iv || sender ephemeral pk || AEAD(amount).
            out.u8(kOutCiphertext);
            out.blob(iv).u64(own.pk).blob(ctx.crypto().aead_encrypt(k, iv, plain.bytes()));
            return {s, out.take()};
        }
        if (op == kInputClaim) {
            Bytes iv = r.blob();
            uint64_t sender_pk = r.u64();
            Bytes ct = r.blob();
            Digest k = ctx.crypto().agree(own.sk, sender_pk);
            auto plain = ctx.crypto().aead_decrypt(k, iv, ct);
            if (!plain.ok()) {
                out.u8(kOutDecryptFail);
                return {s, out.take()};
            }
            ByteReader pr(plain.value());
            out.u8(kOutAmount).u64(pr.u64());
            return {s, out.take()};
        }
        out.u8(kOutDecryptFail);
        return {s, out.take()};
    };
    return p;
}

Result<void> open_channel(Simulation& sim, Handle a, const std::string& role_a, Handle b,
                          const std::string& role_b) {
    auto ra = mitigations::ephemeral_register(sim, a, role_a);
    if (!ra.ok()) return ra.error();
    auto rb = mitigations::ephemeral_register(sim, b, role_b);
    if (!rb.ok()) return rb.error();
    return {};
}

Bytes twilight_pay(Simulation& sim, Handle sender, uint64_t recipient_pk, uint64_t amount) {
    ByteWriter w;
    w.u8(kInputPay).u64(recipient_pk).u64(amount);
    Output out = sim.tee().step(sender, w.take());
    ByteReader r(out);
    if (r.u8() != kOutCiphertext)
        throw ForklabError(ErrorCode::ProgramFault, "relay did not produce a payment");
    return r.rest();
}

Result<uint64_t> twilight_claim(Simulation& sim, Handle recipient, const Bytes& ciphertext) {
    ByteWriter w;
    w.u8(kInputClaim).raw(ciphertext);
    Output out = sim.tee().step(recipient, w.take());
    ByteReader r(out);
    uint8_t tag = r.u8();
    if (tag == kOutAmount) return r.u64();
    return make_error(ErrorCode::DecryptFail, "payment not decryptable by this instance");
}

}  // namespace forklab::protocols::twilight
