#include "forklab/protocols/pouw.hpp"

#include <bit>
#include <cmath>

#include "forklab/codec.hpp"

namespace forklab::protocols::pouw {

namespace {

constexpr uint8_t kProofTag = 1;
constexpr uint8_t kNoLuckTag = 0;

Bytes proof_message(const Bytes& task_output, double r, const Digest& head) {
    ByteWriter w;
    w.str("pouw-proof").blob(task_output).u64(std::bit_cast<uint64_t>(r)).digest(head);
    return w.take();
}

}  // namespace

double threshold(double diff, uint64_t instruction_count) {
    return 1.0 - std::pow(1.0 - diff, static_cast<double>(instruction_count));
}

Input encode_attempt(const Task& task, const Digest& head_hash) {
    ByteWriter w;
    w.u64(task.instruction_count).blob(task.payload).digest(head_hash);
    return w.take();
}

EnclaveProgram pouw_program(const PoUwConfig& config, Variant variant) {
    EnclaveProgram p;
    p.name = variant == Variant::Patched ? "pouw.ephemeral-id" : "pouw";
    p.deterministic = false;
    p.uses_randomness = true;
    p.wants_ephemeral_keys = variant == Variant::Patched;
    p.mutable_persistent_state = false;
    {
        ByteWriter w;
        w.u64(std::bit_cast<uint64_t>(config.diff));
        w.u8(config.direction == PoUwConfig::Direction::SucceedIfAbove ? 1 : 0);
        p.params = w.take();
    }
    bool below = config.direction == PoUwConfig::Direction::SucceedIfBelow;
    double diff = config.diff;
    bool patched = variant == Variant::Patched;
    p.init = [] { return State{}; };
    p.step = [below, diff, patched](const State& s, const Input& in,
                                    EnclaveContext& ctx) -> StepResult {
        ByteReader r(in);
        uint64_t n = r.u64();
        Bytes payload = r.blob();
        Digest head = r.digest();

        // Executing the task: output is a digest of the work.
        ByteWriter ow;
        ow.str("task-output").blob(payload).u64(n);
        Digest out_digest = ctx.crypto().hash(ow.bytes());
        Bytes task_output(out_digest.begin(), out_digest.end());

        double t = threshold(diff, n);
        double draw = ctx.rng().next_unit();
        bool success = below ? (draw <= t) : (draw > t);

        ByteWriter res;
        if (!success) {
            res.u8(kNoLuckTag);
            return {s, res.take()};
        }
        KeyPair key = patched ? *ctx.ephemeral_keypair() : ctx.measurement_key();
        Bytes sig = ctx.crypto().sign(key.sk, proof_message(task_output, draw, head));
        res.u8(kProofTag).blob(task_output).u64(std::bit_cast<uint64_t>(draw)).digest(head);
        res.u64(key.pk).blob(sig);
        return {s, res.take()};
    };
    return p;
}

std::optional<PoUwProof> pouw_attempt(Simulation& sim, Handle h, const Task& task,
                                      const Digest& head_hash) {
    Output out = sim.tee().step(h, encode_attempt(task, head_hash));
    ByteReader r(out);
    if (r.u8() == kNoLuckTag) return std::nullopt;
    PoUwProof proof;
    proof.task_output = r.blob();
    proof.r = std::bit_cast<double>(r.u64());
    proof.bound_block_hash = r.digest();
    proof.signer_pk = r.u64();
    proof.signature = r.blob();
    return proof;
}

Result<void> verify_proof(const Simulation& sim, const PoUwProof& proof, const PoUwConfig& config,
                          const Task& task, const Digest& current_head,
                          std::optional<uint64_t> required_pk) {
    if (proof.bound_block_hash != current_head)
        return make_error(ErrorCode::StaleAnchor, "proof bound to a block that is not the head");
    double t = threshold(config.diff, task.instruction_count);
    bool ok = config.direction == PoUwConfig::Direction::SucceedIfBelow ? (proof.r <= t)
                                                                        : (proof.r > t);
    if (!ok) return make_error(ErrorCode::ValidationFailed, "draw does not meet threshold");
    if (required_pk && proof.signer_pk != *required_pk)
        return make_error(ErrorCode::UnregisteredEphemeralID,
                          "proof signed by an unregistered enclave identity");
    if (!sim.crypto().verify(proof.signer_pk,
                             proof_message(proof.task_output, proof.r, proof.bound_block_hash),
                             proof.signature))
        return make_error(ErrorCode::BadSignature, "proof signature rejected");
    return {};
}

double pouw_clone_trial(uint64_t seed, const PoUwConfig& config, const Task& task, uint32_t clones,
                        uint32_t trials) {
    Simulation sim(seed, FinalMode{1000});
    PlatformId platform = sim.tee().add_platform();
    Measurement m = sim.tee().register_program(
        mitigations::stateless_wrap(pouw_program(config, Variant::Vulnerable)));
    std::vector<Handle> instances;
    instances.push_back(sim.tee().launch(platform, m));
    for (uint32_t c = 1; c < clones; ++c) instances.push_back(sim.clone(instances.front()));

    sim.advance_time(1000);
    Digest head = sim.ledger().canonical_view().head_hash();
    uint32_t successes = 0;
    for (uint32_t i = 0; i < trials; ++i) {
        bool any = false;
        for (Handle h : instances) {
            if (pouw_attempt(sim, h, task, head)) any = true;
        }
        if (any) ++successes;
    }
    return static_cast<double>(successes) / trials;
}

}  // namespace forklab::protocols::pouw
