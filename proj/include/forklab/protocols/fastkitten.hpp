#pragma once

#include "forklab/protocols/common.hpp"

namespace forklab::protocols::fastkitten {

// Randomized lottery executed under the fixed-client policy: each round
// draws one winner uniformly from the k participants.
EnclaveProgram lottery_program(uint32_t client_count);
uint32_t winner_of(const Output& inner_output);

struct LotterySetup {
    Handle enclave;
    Measurement measurement;
    std::vector<KeyPair> clients;
    uint64_t agreed_pk = 0;  // patched: the instance key clients accept
};

// Launches the wrapped lottery with k fresh client identities; patched
// variant has the enclave sign round outputs with its ephemeral key and the
// clients pin that key.
LotterySetup lottery_setup(Simulation& sim, PlatformId platform, uint32_t client_count,
                           Variant variant);

// One honest round: every client signs (current digest, its input).
std::vector<mitigations::SignedRoundInput> sign_round(Simulation& sim, const LotterySetup& setup,
                                                      Handle enclave);
// Clients sign against an explicit digest (what they believe the state is).
std::vector<mitigations::SignedRoundInput> sign_round_at(Simulation& sim,
                                                         const LotterySetup& setup,
                                                         const Digest& state_digest);

}  // namespace forklab::protocols::fastkitten
