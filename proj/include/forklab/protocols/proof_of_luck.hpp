#pragma once

#include <optional>

#include "forklab/protocols/common.hpp"

namespace forklab::protocols::pol {

struct PolProof {
    double luck = 0.0;
    Digest bound_block_hash{};
    uint64_t counter_value = 0;
    uint64_t signer_pk = 0;
    Bytes signature;
};

// Proof of Luck round: increment the platform monotonic counter, sleep a
// random period, then emit a proof only if the counter still holds the value
// observed after the increment. Concurrent clones each bump the counter, so
// all but the last incrementer fail validation.
EnclaveProgram pol_program();

struct StartResult {
    uint64_t sleep_ms = 0;
};

Result<StartResult> pol_start(Simulation& sim, Handle h, const Digest& head_hash);
Result<PolProof> pol_finish(Simulation& sim, Handle h);

// Convenience: start + advance the clock past the sleep + finish, for a
// single instance.
Result<PolProof> pol_generate(Simulation& sim, Handle h, const Digest& head_hash);

Result<void> verify_pol(const Simulation& sim, const PolProof& proof, const Digest& current_head,
                        uint64_t expected_pk);

}  // namespace forklab::protocols::pol
