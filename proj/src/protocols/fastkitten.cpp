#include "forklab/protocols/fastkitten.hpp"

#include "forklab/codec.hpp"

namespace forklab::protocols::fastkitten {

EnclaveProgram lottery_program(uint32_t client_count) {
    EnclaveProgram p;
    p.name = "fastkitten-lottery";
    p.deterministic = false;
    p.uses_randomness = true;
    p.mutable_persistent_state = true;  // round state is sealed between rounds
    {
        ByteWriter w;
        w.u32(client_count);
        p.params = w.take();
    }
    p.init = [client_count] {
        ByteWriter w;
        w.u32(client_count);
        return w.take();
    };
    p.step = [](const State& s, const Input&, EnclaveContext& ctx) -> StepResult {
        ByteReader r(s);
        uint32_t k = r.u32();
        uint32_t winner = static_cast<uint32_t>(ctx.rng().next_below(k));
        ByteWriter out;
        out.u32(winner);
        return {s, out.take()};
    };
    return p;
}

uint32_t winner_of(const Output& inner_output) {
    ByteReader r(inner_output);
    return r.u32();
}

LotterySetup lottery_setup(Simulation& sim, PlatformId platform, uint32_t client_count,
                           Variant variant) {
    LotterySetup setup;
    RngStream client_rng = sim.make_stream("fastkitten-clients");
    std::vector<uint64_t> pks;
    for (uint32_t i = 0; i < client_count; ++i) {
        setup.clients.push_back(sim.crypto().keygen(client_rng));
        pks.push_back(setup.clients.back().pk);
    }
    EnclaveProgram wrapped = mitigations::fixed_client_wrap(
        lottery_program(client_count), pks, /*sign_outputs=*/variant == Variant::Patched);
    setup.measurement = sim.tee().register_program(wrapped);
    setup.enclave = sim.tee().launch(platform, setup.measurement);
    if (variant == Variant::Patched) {
        // Setup fixes the enclave identity the clients will accept.
        setup.agreed_pk = sim.tee().inspect(setup.enclave).ephemeral_keypair->pk;
    }
    return setup;
}

std::vector<mitigations::SignedRoundInput> sign_round(Simulation& sim, const LotterySetup& setup,
                                                      Handle enclave) {
    return sign_round_at(
        sim, setup, mitigations::fixed_client_state_digest(sim.crypto(), sim.tee(), enclave));
}

std::vector<mitigations::SignedRoundInput> sign_round_at(Simulation& sim,
                                                         const LotterySetup& setup,
                                                         const Digest& state_digest) {
    std::vector<mitigations::SignedRoundInput> inputs;
    for (size_t i = 0; i < setup.clients.size(); ++i) {
        ByteWriter w;
        w.str("bet").u32(static_cast<uint32_t>(i));
        inputs.push_back(
            mitigations::sign_round_input(sim.crypto(), setup.clients[i], state_digest, w.take()));
    }
    return inputs;
}

}  // namespace forklab::protocols::fastkitten
