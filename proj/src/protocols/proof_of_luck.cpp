#include "forklab/protocols/proof_of_luck.hpp"

#include <bit>

#include "forklab/codec.hpp"

namespace forklab::protocols::pol {

namespace {

constexpr uint8_t kInputStart = 0;
constexpr uint8_t kInputFinish = 1;

constexpr uint8_t kOutStarted = 0;
constexpr uint8_t kOutProof = 1;
constexpr uint8_t kOutCounterMismatch = 2;
constexpr uint8_t kOutCounterUnsupported = 3;
constexpr uint8_t kOutBadPhase = 4;

struct PolState {
    uint8_t phase = 0;  // 0 idle, 1 sleeping
    uint64_t expected_counter = 0;
    Digest head{};
};

State encode_state(const PolState& s) {
    ByteWriter w;
    w.u8(s.phase).u64(s.expected_counter).digest(s.head);
    return w.take();
}

PolState decode_state(const State& b) {
    ByteReader r(b);
    PolState s;
    s.phase = r.u8();
    s.expected_counter = r.u64();
    s.head = r.digest();
    return s;
}

Bytes pol_message(double luck, const Digest& head, uint64_t counter) {
    ByteWriter w;
    w.str("pol-proof").u64(std::bit_cast<uint64_t>(luck)).digest(head).u64(counter);
    return w.take();
}

}  // namespace

EnclaveProgram pol_program() {
    EnclaveProgram p;
    p.name = "proof-of-luck";
    p.deterministic = false;
    p.uses_randomness = true;
    p.mutable_persistent_state = false;  // round bookkeeping only, never sealed
    p.init = [] { return encode_state(PolState{}); };
    p.step = [](const State& state, const Input& in, EnclaveContext& ctx) -> StepResult {
        PolState s = decode_state(state);
        ByteReader r(in);
        uint8_t op = r.u8();
        ByteWriter out;
        if (op == kInputStart) {
            Digest head = r.digest();
            auto counter = ctx.increment_counter();
            if (!counter.ok()) {
                out.u8(kOutCounterUnsupported);
                return {state, out.take()};
            }
            s.phase = 1;
            s.expected_counter = counter.value();
            s.head = head;
            uint64_t sleep_ms = 1 + ctx.rng().next_below(1000);
            out.u8(kOutStarted).u64(sleep_ms);
            return {encode_state(s), out.take()};
        }
        if (op == kInputFinish) {
            if (s.phase != 1) {
                out.u8(kOutBadPhase);
                return {state, out.take()};
            }
            auto counter = ctx.read_counter();
            if (!counter.ok()) {
                out.u8(kOutCounterUnsupported);
                return {state, out.take()};
            }
            PolState idle;
            if (counter.value() != s.expected_counter) {
                out.u8(kOutCounterMismatch).u64(s.expected_counter).u64(counter.value());
                return {encode_state(idle), out.take()};
            }
            double luck = ctx.rng().next_unit();
            KeyPair key = ctx.measurement_key();
            Bytes sig = ctx.crypto().sign(key.sk, pol_message(luck, s.head, counter.value()));
            out.u8(kOutProof)
                .u64(std::bit_cast<uint64_t>(luck))
                .digest(s.head)
                .u64(counter.value())
                .u64(key.pk)
                .blob(sig);
            return {encode_state(idle), out.take()};
        }
        out.u8(kOutBadPhase);
        return {state, out.take()};
    };
    return p;
}

Result<StartResult> pol_start(Simulation& sim, Handle h, const Digest& head_hash) {
    ByteWriter w;
    w.u8(kInputStart).digest(head_hash);
    Output out = sim.tee().step(h, w.take());
    ByteReader r(out);
    uint8_t tag = r.u8();
    if (tag == kOutCounterUnsupported)
        return make_error(ErrorCode::CounterUnsupported, "platform has no counter service");
    if (tag != kOutStarted) return make_error(ErrorCode::ProgramFault, "unexpected pol phase");
    return StartResult{r.u64()};
}

Result<PolProof> pol_finish(Simulation& sim, Handle h) {
    ByteWriter w;
    w.u8(kInputFinish);
    Output out = sim.tee().step(h, w.take());
    ByteReader r(out);
    uint8_t tag = r.u8();
    if (tag == kOutCounterUnsupported)
        return make_error(ErrorCode::CounterUnsupported, "platform has no counter service");
    if (tag == kOutCounterMismatch) {
        uint64_t expected = r.u64();
        uint64_t got = r.u64();
        return make_error(ErrorCode::CounterMismatch, "expected " + std::to_string(expected) +
                                                          ", counter at " + std::to_string(got));
    }
    if (tag != kOutProof) return make_error(ErrorCode::ProgramFault, "unexpected pol phase");
    PolProof proof;
    proof.luck = std::bit_cast<double>(r.u64());
    proof.bound_block_hash = r.digest();
    proof.counter_value = r.u64();
    proof.signer_pk = r.u64();
    proof.signature = r.blob();
    return proof;
}

Result<PolProof> pol_generate(Simulation& sim, Handle h, const Digest& head_hash) {
    auto started = pol_start(sim, h, head_hash);
    if (!started.ok()) return started.error();
    sim.advance_time(started.value().sleep_ms);
    return pol_finish(sim, h);
}

Result<void> verify_pol(const Simulation& sim, const PolProof& proof, const Digest& current_head,
                        uint64_t expected_pk) {
    if (proof.bound_block_hash != current_head)
        return make_error(ErrorCode::StaleAnchor, "proof bound to a block that is not the head");
    if (!sim.crypto().verify(expected_pk,
                             pol_message(proof.luck, proof.bound_block_hash, proof.counter_value),
                             proof.signature))
        return make_error(ErrorCode::BadSignature, "proof signature rejected");
    return {};
}

}  // namespace forklab::protocols::pol
